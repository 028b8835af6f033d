// Mixes two synthetic images and writes the result next to the binary.
//
//   ./mix_pair [seed]

#include <cstdlib>
#include <iostream>

#include "saliencymix/saliencymix.hpp"

using namespace saliencymix;

namespace {

// Gradient background with a bright square at (cx, cy).
Image make_image(int cx, int cy, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Image img(64, 64, 3);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const bool inside = std::abs(x - cx) <= 5 && std::abs(y - cy) <= 5;
      img.at(x, y, 0) = inside ? r : static_cast<std::uint8_t>(x);
      img.at(x, y, 1) = inside ? g : static_cast<std::uint8_t>(y);
      img.at(x, y, 2) = inside ? b : 40;
    }
  }
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  const Image src = make_image(45, 20, 250, 230, 30);
  const Image tgt = make_image(15, 40, 30, 200, 250);
  const LabelVector y_s = LabelVector::one_hot(10, 3);
  const LabelVector y_t = LabelVector::one_hot(10, 7);

  RngState rng{seed, 0};
  const AugmentedSample out = saliencymix_pair(src, y_s, tgt, y_t, Scheme::sal2corr,
                                               SaliencyMethod::of(MethodTag::fine_grained), rng);
  const MixPlan& plan = out.plan;
  std::cout << "peak " << plan.src_peak.x << "," << plan.src_peak.y << "\n"
            << "patch " << plan.src_rect.x << "," << plan.src_rect.y << " " << plan.src_rect.w << "x"
            << plan.src_rect.h << "\n"
            << "lambda " << plan.lambda_raw << " -> " << plan.lambda_eff << "\n"
            << "label " << format_label_line(0, out.label) << "\n";
  write_image("mixed.png", out.image);
  write_saliency_png(detect(MethodTag::fine_grained, src), "source.saliency.png");
  return 0;
}
