#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nasnerf/image.hpp"

namespace nasnerf {

inline constexpr double kPsnrCap = 100.0;  // returned when the images are identical

// 10 log10(peak^2 / MSE), capped at kPsnrCap. Throws ShapeError on mismatch.
double psnr(const Image& a, const Image& b, double peak = 1.0);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Mean local SSIM over every fully-contained window position, computed per
// channel and averaged over channels. Throws ShapeError if the image is
// smaller than the window.
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});

struct MetricReport {
  std::vector<double> psnr;
  std::vector<double> ssim;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

MetricReport make_report(const std::vector<Image>& predictions, const std::vector<Image>& targets);

// One CSV row; lpips is never computed and is written as "NA".
struct MetricRow {
  std::string scene;
  std::string architecture;
  double psnr = 0.0;
  double ssim = 0.0;
  double params_M = 0.0;
  double flops_G = 0.0;
  double fps = 0.0;
};

std::string metric_csv_header();
// Throws ConfigError if a label contains a comma or newline.
std::string to_csv(const MetricRow& row);
// Throws ConfigError on a malformed line.
MetricRow parse_metric_row(const std::string& line);

}  // namespace nasnerf
