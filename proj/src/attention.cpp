#include "fundus/attention.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace fundus::attn {

namespace {

constexpr double kLogFloor = 1e-12;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_mlp(const ChannelAttnWeights& w, int channels, const char* who) {
    const auto hidden = w.w1.rows();
    if (w.w1.cols() != channels || w.b1.size() != hidden || w.w2.rows() != channels ||
        w.w2.cols() != hidden || w.b2.size() != channels)
        throw ContractError(std::string(who) + ": MLP weight shapes inconsistent with C=" +
                            std::to_string(channels));
}

Eigen::VectorXd mlp_forward(const ChannelAttnWeights& w, const Eigen::VectorXd& x) {
    Eigen::VectorXd hidden = (w.w1 * x + w.b1).cwiseMax(0.0);
    return w.w2 * hidden + w.b2;
}

Eigen::VectorXd avg_pool(const Tensor3& f) {
    Eigen::VectorXd out(f.channels);
    const double inv = 1.0 / (static_cast<double>(f.height) * f.width);
    for (int c = 0; c < f.channels; ++c) {
        double acc = 0.0;
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) acc += f.at(c, y, x);
        out[c] = acc * inv;
    }
    return out;
}

Eigen::VectorXd max_pool(const Tensor3& f) {
    Eigen::VectorXd out(f.channels);
    for (int c = 0; c < f.channels; ++c) {
        double m = -std::numeric_limits<double>::infinity();
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) m = std::max(m, f.at(c, y, x));
        out[c] = m;
    }
    return out;
}

} // namespace

ChannelAttnWeights ChannelAttnWeights::zeros(int channels, int reduction) {
    if (reduction < 1 || channels % reduction != 0)
        throw ContractError("reduction must be >= 1 and divide the channel count");
    const int hidden = channels / reduction;
    return {Eigen::MatrixXd::Zero(hidden, channels), Eigen::VectorXd::Zero(hidden),
            Eigen::MatrixXd::Zero(channels, hidden), Eigen::VectorXd::Zero(channels)};
}

SpatialAttnWeights SpatialAttnWeights::zeros(int k) {
    if (k < 1 || k % 2 == 0) throw ContractError("spatial kernel size must be odd and >= 1");
    return {Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(k, k), 0.0};
}

DependenceWeights DependenceWeights::zeros(int channels, int reduction) {
    return {Eigen::MatrixXd::Zero(channels, channels), Eigen::VectorXd::Zero(channels),
            ChannelAttnWeights::zeros(channels, reduction)};
}

Eigen::VectorXd channel_attention(const Tensor3& f, const ChannelAttnWeights& w) {
    check_mlp(w, f.channels, "channel_attention");
    const Eigen::VectorXd pre = mlp_forward(w, avg_pool(f)) + mlp_forward(w, max_pool(f));
    return pre.unaryExpr([](double v) { return sigmoid(v); });
}

Tensor3 apply_channel(const Tensor3& f, const Eigen::VectorXd& gate) {
    if (gate.size() != f.channels)
        throw ContractError("channel gate length must equal the channel count");
    Tensor3 out = f;
    for (int c = 0; c < f.channels; ++c)
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) out.at(c, y, x) = gate[c] * f.at(c, y, x);
    return out;
}

Eigen::MatrixXd spatial_attention(const Tensor3& f, const SpatialAttnWeights& w) {
    const auto k = w.kernel_avg.rows();
    if (w.kernel_avg.cols() != k || w.kernel_max.rows() != k || w.kernel_max.cols() != k)
        throw ContractError("spatial kernels must be square and equally sized");
    if (k % 2 == 0) throw ContractError("spatial kernel size must be odd");

    // Channel-wise average and maximum planes.
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(f.height, f.width);
    Eigen::MatrixXd mx = Eigen::MatrixXd::Constant(f.height, f.width,
                                                   -std::numeric_limits<double>::infinity());
    for (int c = 0; c < f.channels; ++c)
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) {
                avg(y, x) += f.at(c, y, x);
                mx(y, x) = std::max(mx(y, x), f.at(c, y, x));
            }
    avg /= static_cast<double>(f.channels);

    const int pad = static_cast<int>(k) / 2;
    Eigen::MatrixXd out(f.height, f.width);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double acc = w.bias;
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    const int sy = y + ky - pad;
                    const int sx = x + kx - pad;
                    if (sy < 0 || sy >= f.height || sx < 0 || sx >= f.width) continue; // zero pad
                    acc += w.kernel_avg(ky, kx) * avg(sy, sx) + w.kernel_max(ky, kx) * mx(sy, sx);
                }
            out(y, x) = sigmoid(acc);
        }
    return out;
}

Tensor3 apply_spatial(const Tensor3& f, const Eigen::MatrixXd& gate) {
    if (gate.rows() != f.height || gate.cols() != f.width)
        throw ContractError("spatial gate shape must equal the plane shape");
    Tensor3 out = f;
    for (int c = 0; c < f.channels; ++c)
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) out.at(c, y, x) = gate(y, x) * f.at(c, y, x);
    return out;
}

Tensor3 idiosyncrasy(const Tensor3& f, const ChannelAttnWeights& cw, const SpatialAttnWeights& sw) {
    const Tensor3 channel_gated = apply_channel(f, channel_attention(f, cw));
    return apply_spatial(channel_gated, spatial_attention(channel_gated, sw));
}

Tensor3 dependence(const Tensor3& primary, const Tensor3& other, const DependenceWeights& w) {
    if (!primary.same_shape(other))
        throw ContractError("dependence inputs must share a shape");
    if (w.fc.rows() != primary.channels || w.fc.cols() != primary.channels ||
        w.fc_bias.size() != primary.channels)
        throw ContractError("dependence fc weights inconsistent with the channel count");
    check_mlp(w.mlp, primary.channels, "dependence");

    const Eigen::VectorXd pre = mlp_forward(w.mlp, w.fc * avg_pool(other) + w.fc_bias);
    const Eigen::VectorXd gate = pre.unaryExpr([](double v) { return sigmoid(v); });

    Tensor3 out = primary;
    for (int c = 0; c < primary.channels; ++c)
        for (int y = 0; y < primary.height; ++y)
            for (int x = 0; x < primary.width; ++x)
                out.at(c, y, x) = primary.at(c, y, x) + gate[c] * other.at(c, y, x);
    return out;
}

double cross_entropy(std::span<const double> prob, int true_label) {
    if (prob.empty()) throw ContractError("cross_entropy requires a non-empty distribution");
    if (true_label < 0 || true_label >= static_cast<int>(prob.size()))
        throw ContractError("cross_entropy label out of range");
    double sum = 0.0;
    for (double p : prob) {
        if (p < 0.0 || !std::isfinite(p))
            throw ContractError("cross_entropy probabilities must be finite and >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw ContractError("cross_entropy probabilities must sum to 1 within 1e-6");
    return -std::log(std::max(prob[true_label], kLogFloor));
}

double cross_entropy_mean(const std::vector<std::pair<std::vector<double>, int>>& batch) {
    if (batch.empty()) throw ContractError("cross_entropy_mean requires a non-empty batch");
    double acc = 0.0;
    for (const auto& [prob, label] : batch) acc += cross_entropy(prob, label);
    return acc / static_cast<double>(batch.size());
}

double joint_loss(double loss_a, double loss_b) {
    if (loss_a < 0.0 || loss_b < 0.0) throw ContractError("losses must be non-negative");
    return loss_a + loss_b;
}

double weighted_joint_loss(double loss_a, double loss_b, double aux_a, double aux_b,
                           double lambda) {
    if (loss_a < 0.0 || loss_b < 0.0 || aux_a < 0.0 || aux_b < 0.0)
        throw ContractError("losses must be non-negative");
    if (lambda < 0.0) throw ContractError("lambda must be non-negative");
    return loss_a + loss_b + lambda * (aux_a + aux_b);
}

// ---------------------------------------------------------------- text IO

namespace {

std::string read_tag(std::istream& in) {
    std::string tag;
    if (!(in >> tag)) throw ValidationError("tensor text: missing header");
    return tag;
}

void expect_tag(std::istream& in, const std::string& want) {
    const std::string tag = read_tag(in);
    if (tag != want)
        throw ValidationError("tensor text: expected '" + want + "' header, got '" + tag + "'");
}

double read_value(std::istream& in) {
    double v;
    if (!(in >> v)) throw ValidationError("tensor text: not enough values");
    return v;
}

} // namespace

Tensor3 read_tensor3(std::istream& in) {
    expect_tag(in, "tensor3");
    int c, h, w;
    if (!(in >> c >> h >> w)) throw ValidationError("tensor text: bad tensor3 shape header");
    Tensor3 t(c, h, w);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.values[i] = read_value(in);
    return t;
}

Tensor3 read_tensor3_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tensor file", path);
    return read_tensor3(in);
}

void write_tensor3(std::ostream& out, const Tensor3& t) {
    out << "tensor3 " << t.channels << ' ' << t.height << ' ' << t.width << '\n';
    std::ostringstream line;
    line.precision(17);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        line << t.values[i] << (i + 1 == t.size() ? "\n" : " ");
    }
    out << line.str();
}

Eigen::MatrixXd read_matrix(std::istream& in) {
    expect_tag(in, "matrix");
    int r, c;
    if (!(in >> r >> c) || r < 1 || c < 1)
        throw ValidationError("tensor text: bad matrix shape header");
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = read_value(in);
    return m;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    out << "matrix " << m.rows() << ' ' << m.cols() << '\n';
    out.precision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out << m(i, j) << (j + 1 == m.cols() ? "\n" : " ");
}

Eigen::VectorXd read_vector(std::istream& in) {
    expect_tag(in, "vector");
    int n;
    if (!(in >> n) || n < 1) throw ValidationError("tensor text: bad vector shape header");
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = read_value(in);
    return v;
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
    out << "vector " << v.size() << '\n';
    out.precision(17);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out << v[i] << (i + 1 == v.size() ? "\n" : " ");
}

} // namespace fundus::attn
