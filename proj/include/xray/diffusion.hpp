#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace xray {

/// Dense row-major tensor of doubles.
class FlatTensor {
 public:
  FlatTensor() = default;
  explicit FlatTensor(std::vector<std::size_t> shape, double fill = 0.0);
  FlatTensor(std::vector<std::size_t> shape, std::vector<double> values);

  [[nodiscard]] const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] std::vector<double>& values() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  friend bool operator==(const FlatTensor&, const FlatTensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

/// Per-step noise levels alpha_1..alpha_T, each in (0, 1].
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> alpha);
  /// alpha_t linearly spaced from alpha_first to alpha_last.
  static NoiseSchedule linear(std::size_t steps, double alpha_first, double alpha_last);

  [[nodiscard]] std::size_t steps() const noexcept { return alpha_.size(); }
  /// alpha_t for 1 <= t <= T.
  [[nodiscard]] double alpha(std::size_t t) const;

 private:
  std::vector<double> alpha_;
};

/// eps_theta(x_t, t); must return a tensor shaped like x_t.
using NoisePredictor = std::function<FlatTensor(const FlatTensor&, std::size_t)>;

/// sqrt(alpha_t) * x_prev + sqrt(1 - alpha_t) * eps.
FlatTensor forward_step(const FlatTensor& x_prev, std::size_t t, const NoiseSchedule& schedule,
                        const FlatTensor& eps);

/// (x_t - (1 - alpha_t) / sqrt(1 - alpha_t^2) * eps_hat) / sqrt(alpha_t) with
/// eps_hat = predictor(x_t, t). This coefficient is not the inverse of
/// forward_step. Throws Error(kDomain) for alpha_t = 1.
FlatTensor reverse_step(const FlatTensor& x_t, std::size_t t, const NoiseSchedule& schedule,
                        const NoisePredictor& predictor);

/// Mean of squared differences.
double dm_loss(const FlatTensor& eps, const FlatTensor& eps_pred);

enum class MaskMode {
  kStrict,      // hit values other than 0 or 1 are an error
  kPermissive,  // hit values are rounded to the nearest of 0 and 1
};

/// Masked mean of (X_gt - X_up)^2 over positions where H_gt = 1 (the mask is
/// broadcast over the 8 channels), plus the mean of (H_gt - H_up)^2.
/// X tensors have shape [L, 8, H, W]; hit tensors [L, H, W] or [L, 1, H, W].
/// The first term is 0 when the mask is empty.
double upsampler_loss(const FlatTensor& x_gt, const FlatTensor& x_up, const FlatTensor& h_gt,
                      const FlatTensor& h_up, MaskMode mode = MaskMode::kStrict);

/// Gradient of upsampler_loss with respect to X_up.
FlatTensor upsampler_loss_grad_x(const FlatTensor& x_gt, const FlatTensor& x_up,
                                 const FlatTensor& h_gt, MaskMode mode = MaskMode::kStrict);

}  // namespace xray
