#include "ssmgen/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ssmgen {

using nlohmann::json;

json params_to_json(const SSMLayerParams& params) {
    json j;
    j["m"] = params.m;
    j["d"] = params.d;
    j["repr"] = params.repr == Repr::Diag ? "diag" : "full";
    if (params.repr == Repr::Diag) {
        j["a_log_re"] = params.a_log_re;
        j["a_im"] = params.a_im;
    } else {
        std::vector<double> a_re(static_cast<std::size_t>(params.m) * params.m);
        for (int r = 0; r < params.m; ++r)
            for (int c = 0; c < params.m; ++c) a_re[static_cast<std::size_t>(r) * params.m + c] = params.a_full(r, c);
        j["a_log_re"] = a_re;
        j["a_im"] = std::vector<double>(a_re.size(), 0.0);
    }
    j["b_re"] = params.b_re;
    j["b_im"] = params.b_im;
    json c_re = json::array(), c_im = json::array();
    for (int ch = 0; ch < params.d; ++ch) {
        std::vector<double> row_re(params.m), row_im(params.m);
        for (int n = 0; n < params.m; ++n) {
            row_re[n] = params.c_re[static_cast<std::size_t>(ch) * params.m + n];
            row_im[n] = params.c_im[static_cast<std::size_t>(ch) * params.m + n];
        }
        c_re.push_back(row_re);
        c_im.push_back(row_im);
    }
    j["c_re"] = c_re;
    j["c_im"] = c_im;
    if (params.has_skip()) j["d_skip"] = params.d_skip;
    j["delta"] = params.delta;
    return j;
}

SSMLayerParams params_from_json(const json& j) {
    SSMLayerParams p;
    p.m = j.at("m").get<int>();
    p.d = j.at("d").get<int>();
    const std::string repr = j.at("repr").get<std::string>();
    if (repr == "diag") {
        p.repr = Repr::Diag;
        p.a_log_re = j.at("a_log_re").get<std::vector<double>>();
        p.a_im = j.at("a_im").get<std::vector<double>>();
    } else if (repr == "full") {
        p.repr = Repr::Full;
        const auto a_re = j.at("a_log_re").get<std::vector<double>>();
        if (a_re.size() != static_cast<std::size_t>(p.m) * p.m)
            throw std::invalid_argument("full A array has wrong length");
        p.a_full.resize(p.m, p.m);
        for (int r = 0; r < p.m; ++r)
            for (int c = 0; c < p.m; ++c) p.a_full(r, c) = a_re[static_cast<std::size_t>(r) * p.m + c];
    } else {
        throw std::invalid_argument("unknown repr: " + repr);
    }
    p.b_re = j.at("b_re").get<std::vector<double>>();
    p.b_im = j.at("b_im").get<std::vector<double>>();
    const auto c_re = j.at("c_re").get<std::vector<std::vector<double>>>();
    const auto c_im = j.at("c_im").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(c_re.size()) != p.d || static_cast<int>(c_im.size()) != p.d)
        throw std::invalid_argument("C has wrong number of rows");
    p.c_re.resize(static_cast<std::size_t>(p.d) * p.m);
    p.c_im.resize(p.c_re.size());
    for (int ch = 0; ch < p.d; ++ch) {
        if (static_cast<int>(c_re[ch].size()) != p.m || static_cast<int>(c_im[ch].size()) != p.m)
            throw std::invalid_argument("C row has wrong length");
        for (int n = 0; n < p.m; ++n) {
            p.c_re[static_cast<std::size_t>(ch) * p.m + n] = c_re[ch][n];
            p.c_im[static_cast<std::size_t>(ch) * p.m + n] = c_im[ch][n];
        }
    }
    if (j.contains("d_skip")) p.d_skip = j.at("d_skip").get<std::vector<double>>();
    p.delta = j.at("delta").get<std::vector<double>>();
    p.validate();
    return p;
}

json model_to_json(const std::vector<SSMLayerParams>& model) {
    json layers = json::array();
    for (const auto& layer : model) layers.push_back(params_to_json(layer));
    return json{{"layers", layers}};
}

std::vector<SSMLayerParams> model_from_json(const json& j) {
    std::vector<SSMLayerParams> model;
    if (j.contains("layers")) {
        for (const auto& lj : j.at("layers")) model.push_back(params_from_json(lj));
    } else {
        model.push_back(params_from_json(j));
    }
    return model;
}

void save_model(const std::vector<SSMLayerParams>& model, const std::string& path) {
    write_file(path, model_to_json(model).dump(2) + "\n");
}

std::vector<SSMLayerParams> load_model(const std::string& path) {
    return model_from_json(json::parse(read_file(path)));
}

std::uint64_t model_hash(const std::vector<SSMLayerParams>& model) {
    return fnv1a(model_to_json(model).dump());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << contents;
}

}  // namespace ssmgen
