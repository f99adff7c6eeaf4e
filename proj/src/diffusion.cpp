#include "xray/diffusion.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "xray/error.hpp"

namespace xray {
namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const FlatTensor& a, const FlatTensor& b, const char* what) {
  if (a.shape() != b.shape()) throw Error(Errc::kShapeMismatch, std::string(what) + ": shape mismatch");
}

struct MaskLayout {
  std::size_t layers, channels, pixels;
};

MaskLayout mask_layout(const FlatTensor& x_gt, const FlatTensor& h_gt) {
  const auto& xs = x_gt.shape();
  const auto& hs = h_gt.shape();
  if (xs.size() != 4) throw Error(Errc::kShapeMismatch, "X must have shape [L, C, H, W]");
  const bool squeezed = hs.size() == 3 && hs[0] == xs[0] && hs[1] == xs[2] && hs[2] == xs[3];
  const bool unit_channel =
      hs.size() == 4 && hs[0] == xs[0] && hs[1] == 1 && hs[2] == xs[2] && hs[3] == xs[3];
  if (!squeezed && !unit_channel) {
    throw Error(Errc::kShapeMismatch, "hit tensor must have shape [L, H, W] or [L, 1, H, W]");
  }
  return {xs[0], xs[1], xs[2] * xs[3]};
}

std::vector<char> hard_mask(const FlatTensor& h, MaskMode mode) {
  std::vector<char> mask(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double v = h[i];
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::kDomain, "hit value outside [0, 1]");
    if (mode == MaskMode::kStrict && v != 0.0 && v != 1.0) {
      throw Error(Errc::kDomain, "non-binary hit value " + std::to_string(v) + " in strict mode");
    }
    mask[i] = v >= 0.5;
  }
  return mask;
}

}  // namespace

FlatTensor::FlatTensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(product(shape_), fill) {}

FlatTensor::FlatTensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != product(shape_)) {
    throw Error(Errc::kShapeMismatch, "value count does not match the shape");
  }
}

NoiseSchedule::NoiseSchedule(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  if (alpha_.empty()) throw Error(Errc::kInvalidArgument, "empty noise schedule");
  for (double a : alpha_) {
    if (!(a > 0.0 && a <= 1.0)) throw Error(Errc::kDomain, "alpha must lie in (0, 1]");
  }
}

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double alpha_first, double alpha_last) {
  std::vector<double> a(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double f = steps > 1 ? static_cast<double>(i) / static_cast<double>(steps - 1) : 0.0;
    a[i] = alpha_first + f * (alpha_last - alpha_first);
  }
  return NoiseSchedule(std::move(a));
}

double NoiseSchedule::alpha(std::size_t t) const {
  if (t < 1 || t > alpha_.size()) {
    throw Error(Errc::kIndexOutOfRange, "step " + std::to_string(t) + " outside [1, " +
                                            std::to_string(alpha_.size()) + "]");
  }
  return alpha_[t - 1];
}

FlatTensor forward_step(const FlatTensor& x_prev, std::size_t t, const NoiseSchedule& schedule,
                        const FlatTensor& eps) {
  require_same_shape(x_prev, eps, "forward_step");
  const double a = schedule.alpha(t);
  const double sa = std::sqrt(a);
  const double sn = std::sqrt(1.0 - a);
  FlatTensor out = x_prev;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sa * x_prev[i] + sn * eps[i];
  return out;
}

FlatTensor reverse_step(const FlatTensor& x_t, std::size_t t, const NoiseSchedule& schedule,
                        const NoisePredictor& predictor) {
  const double a = schedule.alpha(t);
  if (a >= 1.0) throw Error(Errc::kDomain, "reverse step undefined for alpha_t = 1");
  const FlatTensor eps_hat = predictor(x_t, t);
  require_same_shape(x_t, eps_hat, "reverse_step");
  const double coeff = (1.0 - a) / std::sqrt(1.0 - a * a);
  const double scale = 1.0 / std::sqrt(a);
  FlatTensor out = x_t;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * (x_t[i] - coeff * eps_hat[i]);
  return out;
}

double dm_loss(const FlatTensor& eps, const FlatTensor& eps_pred) {
  require_same_shape(eps, eps_pred, "dm_loss");
  if (eps.size() == 0) throw Error(Errc::kShapeMismatch, "dm_loss of empty tensors");
  double sum = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = eps[i] - eps_pred[i];
    sum += d * d;
  }
  return sum / static_cast<double>(eps.size());
}

double upsampler_loss(const FlatTensor& x_gt, const FlatTensor& x_up, const FlatTensor& h_gt,
                      const FlatTensor& h_up, MaskMode mode) {
  require_same_shape(x_gt, x_up, "upsampler_loss X");
  require_same_shape(h_gt, h_up, "upsampler_loss H");
  const MaskLayout m = mask_layout(x_gt, h_gt);
  const std::vector<char> mask = hard_mask(h_gt, mode);

  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t l = 0; l < m.layers; ++l) {
    for (std::size_t c = 0; c < m.channels; ++c) {
      for (std::size_t p = 0; p < m.pixels; ++p) {
        if (!mask[l * m.pixels + p]) continue;
        const std::size_t i = (l * m.channels + c) * m.pixels + p;
        const double d = x_gt[i] - x_up[i];
        sum += d * d;
        ++count;
      }
    }
  }
  const double first = count ? sum / static_cast<double>(count) : 0.0;

  double hsum = 0.0;
  for (std::size_t i = 0; i < h_gt.size(); ++i) {
    const double d = h_gt[i] - h_up[i];
    hsum += d * d;
  }
  const double second = h_gt.size() ? hsum / static_cast<double>(h_gt.size()) : 0.0;
  return first + second;
}

FlatTensor upsampler_loss_grad_x(const FlatTensor& x_gt, const FlatTensor& x_up,
                                 const FlatTensor& h_gt, MaskMode mode) {
  require_same_shape(x_gt, x_up, "upsampler_loss_grad_x");
  const MaskLayout m = mask_layout(x_gt, h_gt);
  const std::vector<char> mask = hard_mask(h_gt, mode);
  std::size_t masked = 0;
  for (char v : mask) masked += v;
  const std::size_t count = masked * m.channels;

  FlatTensor grad(x_up.shape());
  if (count == 0) return grad;
  for (std::size_t l = 0; l < m.layers; ++l) {
    for (std::size_t c = 0; c < m.channels; ++c) {
      for (std::size_t p = 0; p < m.pixels; ++p) {
        if (!mask[l * m.pixels + p]) continue;
        const std::size_t i = (l * m.channels + c) * m.pixels + p;
        grad[i] = 2.0 * (x_up[i] - x_gt[i]) / static_cast<double>(count);
      }
    }
  }
  return grad;
}

}  // namespace xray
