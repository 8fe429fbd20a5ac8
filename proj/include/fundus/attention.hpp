#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fundus/error.hpp"

namespace fundus::attn {

/// Dense [channels x height x width] tensor, value at (c, y, x) stored at
/// flat index (c * H + y) * W + x. Double precision throughout; this module
/// is a desk-scale numerical reference, not a training surface.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    Eigen::VectorXd values;

    Tensor3() = default;
    Tensor3(int c, int h, int w)
        : channels(c), height(h), width(w), values(Eigen::VectorXd::Zero(size())) {
        if (c < 1 || h < 1 || w < 1) throw ContractError("tensor dimensions must be >= 1");
    }

    Eigen::Index size() const {
        return static_cast<Eigen::Index>(channels) * height * width;
    }
    double& at(int c, int y, int x) {
        return values[(static_cast<Eigen::Index>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return values[(static_cast<Eigen::Index>(c) * height + y) * width + x];
    }
    bool same_shape(const Tensor3& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

/// Shared two-layer MLP: w2 * relu(w1 * x + b1) + b2, hidden width C/r.
struct ChannelAttnWeights {
    Eigen::MatrixXd w1; // (C/r) x C
    Eigen::VectorXd b1; // C/r
    Eigen::MatrixXd w2; // C x (C/r)
    Eigen::VectorXd b2; // C

    static ChannelAttnWeights zeros(int channels, int reduction);
};

/// k x k convolution over the stacked [channel-avg, channel-max] planes.
struct SpatialAttnWeights {
    Eigen::MatrixXd kernel_avg; // k x k, applied to the channel-average plane
    Eigen::MatrixXd kernel_max; // k x k, applied to the channel-max plane
    double bias = 0.0;

    static SpatialAttnWeights zeros(int k = 7);
};

struct DependenceWeights {
    Eigen::MatrixXd fc;      // C x C
    Eigen::VectorXd fc_bias; // C
    ChannelAttnWeights mlp;

    static DependenceWeights zeros(int channels, int reduction);
};

/// Channel gate: sigmoid(MLP(avgpool(F)) + MLP(maxpool(F))), one value per
/// channel, strictly in (0,1).
Eigen::VectorXd channel_attention(const Tensor3& f, const ChannelAttnWeights& w);

/// out[c,y,x] = gate[c] * f[c,y,x]
Tensor3 apply_channel(const Tensor3& f, const Eigen::VectorXd& gate);

/// Spatial gate: sigmoid(conv_k([avg_c(F); max_c(F)]) + bias) with zero
/// padding (k-1)/2, one value per pixel.
Eigen::MatrixXd spatial_attention(const Tensor3& f, const SpatialAttnWeights& w);

/// out[c,y,x] = gate[y,x] * f[c,y,x]
Tensor3 apply_spatial(const Tensor3& f, const Eigen::MatrixXd& gate);

/// Channel gating followed by spatial gating of the channel-gated map.
Tensor3 idiosyncrasy(const Tensor3& f, const ChannelAttnWeights& cw, const SpatialAttnWeights& sw);

/// Cross-feature gate: primary + sigmoid(MLP(fc(avgpool(other)))) * other,
/// the per-channel gate broadcast over spatial positions. Swapping the two
/// inputs yields the other task's output.
Tensor3 dependence(const Tensor3& primary, const Tensor3& other, const DependenceWeights& w);

/// -log(max(prob[label], 1e-12)); prob must be a distribution within 1e-6.
double cross_entropy(std::span<const double> prob, int true_label);

/// Mean cross-entropy over (distribution, label) records.
double cross_entropy_mean(const std::vector<std::pair<std::vector<double>, int>>& batch);

double joint_loss(double loss_a, double loss_b);

/// loss_a + loss_b + lambda * (aux_a + aux_b)
double weighted_joint_loss(double loss_a, double loss_b, double aux_a, double aux_b,
                           double lambda = 0.25);

// Plain structured-text tensor exchange: a "tensor3 C H W", "matrix R C" or
// "vector N" header line followed by whitespace-separated values, so fixture
// files can be produced and consumed from any language.
Tensor3 read_tensor3(std::istream& in);
Tensor3 read_tensor3_file(const std::string& path);
void write_tensor3(std::ostream& out, const Tensor3& t);
Eigen::MatrixXd read_matrix(std::istream& in);
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::VectorXd read_vector(std::istream& in);
void write_vector(std::ostream& out, const Eigen::VectorXd& v);

} // namespace fundus::attn
