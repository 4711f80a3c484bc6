#include "n2d/nn/tensor_image.hpp"

#include "n2d/core/error.hpp"

namespace n2d::nn {

torch::Tensor to_tensor(const Image& img) {
  auto hwc = torch::from_blob(const_cast<float*>(img.data().data()), {img.height(), img.width(), img.channels()},
                              torch::kFloat32);
  return hwc.permute({2, 0, 1}).contiguous();
}

torch::Tensor to_batch(const std::vector<const Image*>& images) {
  if (images.empty()) throw ArgumentError("cannot batch zero images");
  std::vector<torch::Tensor> parts;
  parts.reserve(images.size());
  for (const Image* img : images) {
    auto t = to_tensor(*img);
    if (t.size(0) == 1) t = t.expand({3, -1, -1});
    parts.push_back(t);
  }
  return torch::stack(parts).contiguous();
}

torch::Tensor to_batch(const std::vector<Image>& images) {
  std::vector<const Image*> ptrs;
  ptrs.reserve(images.size());
  for (const Image& img : images) ptrs.push_back(&img);
  return to_batch(ptrs);
}

Image to_image(const torch::Tensor& chw) {
  if (chw.dim() != 3) throw ShapeError("expected a [C,H,W] tensor");
  auto hwc = chw.detach().to(torch::kFloat32).clamp(0.0, 1.0).permute({1, 2, 0}).contiguous();
  const auto c = static_cast<int>(hwc.size(2));
  const auto h = static_cast<int>(hwc.size(0));
  const auto w = static_cast<int>(hwc.size(1));
  const float* p = hwc.data_ptr<float>();
  return Image::from_data(h, w, c, std::vector<float>(p, p + hwc.numel()));
}

std::vector<ScaleSet> to_scale_sets(const std::vector<torch::Tensor>& scales) {
  if (scales.empty()) return {};
  const auto batch = scales.front().size(0);
  std::vector<ScaleSet> out(static_cast<std::size_t>(batch));
  for (const auto& s : scales) {
    for (int64_t b = 0; b < batch; ++b) out[static_cast<std::size_t>(b)].images.push_back(to_image(s[b]));
  }
  return out;
}

std::vector<torch::Tensor> tensor_pyramid(const torch::Tensor& x, int levels) {
  if (levels < 1) throw ArgumentError("pyramid needs at least one level");
  std::vector<torch::Tensor> out{x};
  for (int k = 1; k < levels; ++k) out.push_back(torch::avg_pool2d(out.back(), 2));
  return out;
}

}  // namespace n2d::nn
