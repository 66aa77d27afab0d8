#include "srcondense/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "srcondense/errors.hpp"
#include "srcondense/metrics.hpp"
#include "srcondense/patches.hpp"

namespace srcn {

std::vector<EvalSample> load_eval_set(const std::filesystem::path& dir, std::size_t scale) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("evaluation directory not found: " + dir.string());
  std::vector<EvalSample> out;
  const fs::path hr_dir = dir / "HR";
  const fs::path lr_dir = dir / "LR";
  if (fs::is_directory(hr_dir) && fs::is_directory(lr_dir)) {
    for (const auto& hr_path : list_images(hr_dir)) {
      const fs::path lr_path = lr_dir / hr_path.filename();
      if (!fs::exists(lr_path)) throw IoError("no LR counterpart for " + hr_path.string());
      EvalSample s{hr_path.stem().string(), luma(read_image(lr_path)), luma(read_image(hr_path))};
      if (s.hr.height < s.lr.height * scale || s.hr.width < s.lr.width * scale) {
        throw DimensionError(hr_path.filename().string() + ": HR is smaller than " + std::to_string(scale) +
                             "x its LR image");
      }
      s.hr = crop(s.hr, 0, 0, s.lr.height * scale, s.lr.width * scale);
      out.push_back(std::move(s));
    }
  } else {
    for (const auto& path : list_images(dir)) {
      ImagePlane hr = crop_to_multiple(luma(read_image(path)), scale);
      if (hr.height == 0 || hr.width == 0) continue;
      ImagePlane lr = bicubic_resize(hr, hr.height / scale, hr.width / scale);
      out.push_back({path.stem().string(), std::move(lr), std::move(hr)});
    }
  }
  if (out.empty()) throw IoError("no images found in " + dir.string());
  return out;
}

template <typename T>
ImagePlane bicubic_upscale(const ImagePlane& lr, std::size_t scale) {
  return clamp_pixels(tensor_to_plane(Model<T>::bicubic_upsample(plane_to_tensor<T>(lr), scale)));
}

template <typename T>
ImagePlane super_resolve(const Model<T>& model, const ImagePlane& lr) {
  NoGradGuard no_grad;
  const Var<T> y = model.forward(Var<T>(plane_to_tensor<T>(lr)));
  return clamp_pixels(tensor_to_plane(y.value()));
}

template <typename T>
EvalSummary evaluate(const Model<T>& model, std::span<const EvalSample> samples, std::size_t shave,
                     std::size_t jobs) {
  EvalSummary summary;
  summary.images.resize(samples.size());
  const std::size_t scale = model.config().scale;
  auto score = [&](std::size_t i) {
    const EvalSample& s = samples[i];
    ImagePlane sr = super_resolve(model, s.lr);
    ImagePlane base = bicubic_upscale<T>(s.lr, scale);
    if (sr.height != s.hr.height || sr.width != s.hr.width) {
      throw DimensionError(s.name + ": output size differs from the HR image");
    }
    ImageScore& r = summary.images[i];
    r.name = s.name;
    r.psnr = psnr(sr, s.hr, shave);
    r.bicubic_psnr = psnr(base, s.hr, shave);
    const ImagePlane hr_c = shave_border(s.hr, shave);
    r.ssim = ssim(shave_border(sr, shave), hr_c);
    r.bicubic_ssim = ssim(shave_border(base, shave), hr_c);
  };

  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, samples.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) score(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t j = 0; j < jobs; ++j) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < samples.size(); i = next++) {
          try {
            score(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (const auto& r : summary.images) {
    summary.mean_psnr += r.psnr;
    summary.mean_ssim += r.ssim;
    summary.mean_bicubic_psnr += r.bicubic_psnr;
    summary.mean_bicubic_ssim += r.bicubic_ssim;
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, summary.images.size()));
  summary.mean_psnr /= n;
  summary.mean_ssim /= n;
  summary.mean_bicubic_psnr /= n;
  summary.mean_bicubic_ssim /= n;
  return summary;
}

template ImagePlane bicubic_upscale<float>(const ImagePlane&, std::size_t);
template ImagePlane bicubic_upscale<double>(const ImagePlane&, std::size_t);
template ImagePlane super_resolve(const Model<float>&, const ImagePlane&);
template ImagePlane super_resolve(const Model<double>&, const ImagePlane&);
template EvalSummary evaluate(const Model<float>&, std::span<const EvalSample>, std::size_t, std::size_t);
template EvalSummary evaluate(const Model<double>&, std::span<const EvalSample>, std::size_t, std::size_t);

}  // namespace srcn
