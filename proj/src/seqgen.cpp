#include "ssmgen/seqgen.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "ssmgen/serialize.hpp"

namespace ssmgen {

using nlohmann::json;

void ProcessSpec::validate() const {
    if (length < 1 || dim < 1) throw std::invalid_argument("process length and dim must be >= 1");
    if (kind == ProcessKind::GaussianWhiteNoise && bandwidth == 0.0)
        throw std::invalid_argument("white-noise bandwidth must be nonzero");
}

double ProcessSpec::mean_at(double) const {
    switch (kind) {
        case ProcessKind::GaussianWhiteNoise: return mean;
        default: return 0.0;
    }
}

double ProcessSpec::covariance(double s, double t) const {
    const double lag = s - t;
    switch (kind) {
        case ProcessKind::GaussianWhiteNoise: {
            const double u = lag / bandwidth;
            return std::exp(-u * u) / (std::fabs(bandwidth) * std::sqrt(3.14159265358979323846));
        }
        case ProcessKind::OrnsteinUhlenbeck:
            return std::exp(-std::fabs(lag));
        case ProcessKind::IdenticalGaussian:
            return 1.0;
    }
    return 0.0;
}

std::string process_kind_name(ProcessKind kind) {
    switch (kind) {
        case ProcessKind::GaussianWhiteNoise: return "gaussian_white_noise";
        case ProcessKind::OrnsteinUhlenbeck: return "ornstein_uhlenbeck";
        case ProcessKind::IdenticalGaussian: return "identical_gaussian";
    }
    return "?";
}

ProcessKind process_kind_from_name(const std::string& name) {
    if (name == "gaussian_white_noise") return ProcessKind::GaussianWhiteNoise;
    if (name == "ornstein_uhlenbeck") return ProcessKind::OrnsteinUhlenbeck;
    if (name == "identical_gaussian") return ProcessKind::IdenticalGaussian;
    throw std::invalid_argument("unknown process kind: " + name);
}

Eigen::MatrixXd covariance_matrix(const ProcessSpec& spec) {
    spec.validate();
    const int L = spec.length;
    Eigen::MatrixXd K(L, L);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j <= i; ++j) {
            const double v = spec.covariance(i, j);
            K(i, j) = v;
            K(j, i) = v;
        }
    return K;
}

namespace {

// Cholesky with escalating jitter: start 1e-12 * trace/L, grow by 10x up to
// 1e-6 * trace/L. Near-singular covariances (identical sequences, tiny b)
// need this regularization.
Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& K) {
    const int L = static_cast<int>(K.rows());
    const double scale = K.trace() / L;
    for (double jitter = 1e-12; jitter <= 1.0000001e-6; jitter *= 10.0) {
        Eigen::MatrixXd reg = K;
        reg.diagonal().array() += jitter * scale;
        Eigen::LLT<Eigen::MatrixXd> llt(reg);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw std::domain_error("non-PSD covariance");
}

}  // namespace

double label_rule(const double* seq, int length, int dim) {
    return std::sin(seq[static_cast<std::size_t>(length / 2) * dim]);
}

SequenceDataset sample_batch(const ProcessSpec& spec, int n) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("sample count must be >= 1");
    const int L = spec.length;
    const int d = spec.dim;
    const Eigen::MatrixXd chol = cholesky_with_jitter(covariance_matrix(spec));

    SequenceDataset ds;
    ds.spec = spec;
    ds.inputs = Batch(n, L, d);
    ds.labels.resize(n);

    Eigen::VectorXd z(L), x(L);
    for (int i = 0; i < n; ++i) {
        NormalSampler sampler(stream_seed(spec.seed, i));
        for (int t = 0; t < L; ++t) z[t] = sampler.next();
        x.noalias() = chol * z;
        double* out = ds.inputs.seq(i);
        for (int t = 0; t < L; ++t) {
            const double v = x[t] + spec.mean_at(t);
            for (int ch = 0; ch < d; ++ch) out[static_cast<std::size_t>(t) * d + ch] = v;
        }
        ds.labels[i] = label_rule(out, L, d);
    }
    return ds;
}

std::vector<double> pad_left_zero(const std::vector<double>& x) {
    std::vector<double> out(2 * x.size(), 0.0);
    std::copy(x.begin(), x.end(), out.begin() + x.size());
    return out;
}

std::vector<double> pad_right_zero(const std::vector<double>& x) {
    std::vector<double> out(2 * x.size(), 0.0);
    std::copy(x.begin(), x.end(), out.begin());
    return out;
}

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace

void save_dataset(const SequenceDataset& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);
    json meta;
    meta["kind"] = process_kind_name(ds.spec.kind);
    meta["b"] = ds.spec.bandwidth;
    meta["mean"] = ds.spec.mean;
    meta["length"] = ds.spec.length;
    meta["dim"] = ds.spec.dim;
    meta["seed"] = ds.spec.seed;
    meta["n"] = ds.inputs.n;
    meta["label_rule"] = "sin(x[floor(L/2)][0])";
    write_file(dir + "/meta.json", meta.dump(2) + "\n");

    const int L = ds.spec.length, d = ds.spec.dim;
    std::string csv;
    csv.reserve(static_cast<std::size_t>(ds.inputs.n) * L * d * 20);
    for (int t = 0; t < L; ++t)
        for (int ch = 0; ch < d; ++ch) {
            csv += "x" + std::to_string(t) + "_" + std::to_string(ch) + ",";
        }
    csv += "label\n";
    for (int i = 0; i < ds.inputs.n; ++i) {
        const double* seq = ds.inputs.seq(i);
        for (int j = 0; j < L * d; ++j) {
            append_double(csv, seq[j]);
            csv += ',';
        }
        append_double(csv, ds.labels[i]);
        csv += '\n';
    }
    write_file(dir + "/data.csv", csv);
}

SequenceDataset load_dataset(const std::string& dir) {
    const json meta = json::parse(read_file(dir + "/meta.json"));
    SequenceDataset ds;
    ds.spec.kind = process_kind_from_name(meta.at("kind").get<std::string>());
    ds.spec.bandwidth = meta.at("b").get<double>();
    ds.spec.mean = meta.at("mean").get<double>();
    ds.spec.length = meta.at("length").get<int>();
    ds.spec.dim = meta.at("dim").get<int>();
    ds.spec.seed = meta.at("seed").get<std::uint64_t>();
    const int n = meta.at("n").get<int>();
    const int L = ds.spec.length, d = ds.spec.dim;

    ds.inputs = Batch(n, L, d);
    ds.labels.resize(n);
    std::istringstream in(read_file(dir + "/data.csv"));
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset csv");
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw std::runtime_error("dataset csv truncated");
        const char* p = line.data();
        const char* end = line.data() + line.size();
        double* seq = ds.inputs.seq(i);
        for (int j = 0; j < L * d; ++j) {
            double v = 0.0;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc()) throw std::runtime_error("bad float in dataset csv");
            seq[j] = v;
            p = res.ptr;
            if (p < end && *p == ',') ++p;
        }
        double label = 0.0;
        const auto res = std::from_chars(p, end, label);
        if (res.ec != std::errc()) throw std::runtime_error("bad label in dataset csv");
        ds.labels[i] = label;
    }
    return ds;
}

std::uint64_t dataset_hash(const SequenceDataset& ds) {
    std::uint64_t h = fnv1a(ds.inputs.data.data(), ds.inputs.data.size() * sizeof(double));
    h = fnv1a(ds.labels.data(), ds.labels.size() * sizeof(double), h);
    return h;
}

}  // namespace ssmgen
