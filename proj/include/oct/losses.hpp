#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oct/image.hpp"
#include "oct/tensor.hpp"

namespace oct {

// Content weights w_j and style weights k_j, one per perceptual network in
// kPerceptualNetworks order.
struct LossWeights {
    std::vector<double> content = {2.86, 4.0, 6.67};
    std::vector<double> style = {6.67e-5, 1.8e-5, 2.1e-5};

    void validate() const;
    bool operator==(const LossWeights&) const = default;
};

// sum(pred) / sum(gt). Throws DegenerateError when gt sums to zero.
double shadow_loss(const ShadowMask& pred, const ShadowMask& gt);
template <class T>
T shadow_loss(const Tensor<T>& pred, const Tensor<T>& gt, Tensor<T>* grad_pred = nullptr);

// Zeroes every pixel where the binary gt mask is 1.
BScan mask_out_shadows(const BScan& image, const ShadowMask& gt);
// Multiplicative keep-map (1 - gt) used inside the training graph.
template <class T>
Tensor<T> shadow_keep_map(const ShadowMask& gt);

// sum_i 1/(C_i H_i W_i) * ||P_i(D) - P_i(C)||^2
template <class T>
T content_loss(std::span<const Tensor<T>> feats_d, std::span<const Tensor<T>> feats_c,
               std::vector<Tensor<T>>* grad_d = nullptr);

// G[a,b] = sum over positions of F[a,p] * F[b,p], unnormalized.
template <class T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> gram(const Tensor<T>& feature);

// sum_i ||G_i(D) - G_i(C)||_F^2
template <class T>
T style_loss(std::span<const Tensor<T>> feats_d, std::span<const Tensor<T>> feats_c,
             std::vector<Tensor<T>>* grad_d = nullptr);

// sum_j (w_j content_j + k_j style_j) + shadow. Throws ConfigError when the
// term counts and weight counts disagree.
double total_loss(std::span<const double> content, std::span<const double> style, double shadow,
                  const LossWeights& weights);

// ---- weight calibration ----

// Raw (unweighted) loss terms of one training batch.
struct LossTerms {
    std::vector<double> content;
    std::vector<double> style;
    double shadow = 0.0;
    double total = 0.0;
};

// Runs `batches` optimisation batches with the given weights and returns the
// raw terms of each. Provided by the trainer.
using CalibrationRunner = std::function<std::vector<LossTerms>(const LossWeights& weights, int batches)>;

struct CalibrationOptions {
    int window = 50;          // running-mean window, in batches
    double tolerance = 2.0;   // accepted ratio between weighted style and content
    int max_style_rounds = 3;
};

struct CalibrationResult {
    LossWeights weights;
    std::vector<double> content_means;
    std::vector<double> style_means;
    double shadow_mean = 0.0;
    std::vector<double> final_style_to_content;  // k_j s_j / (w_j c_j) in the last window
    std::vector<std::string> log;
};

// Mean of the last `window` values (all of them when fewer).
double running_mean(std::span<const double> values, int window);

// w_j = shadow_mean / content_mean_j.
std::vector<double> balance_content_weights(std::span<const double> content_means, double shadow_mean);
// k_j = target_j / style_mean_j.
std::vector<double> balance_style_weights(std::span<const double> style_means, std::span<const double> targets);

// Stage 1 trains with k = 0 and balances w against the shadow term; stage 2
// enables style and balances k against the weighted content terms.
CalibrationResult calibrate_weights(const CalibrationRunner& runner, int content_terms,
                                    const CalibrationOptions& options = {});

}  // namespace oct
