#include "nasnerf/metrics.hpp"

#include <cmath>
#include <sstream>

#include "nasnerf/error.hpp"

namespace nasnerf {
namespace {

void check_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": image shapes differ");
  if (a.data.empty()) throw ShapeError(std::string(what) + ": empty image");
}

std::vector<double> gaussian(int size, double sigma) {
  std::vector<double> g(size);
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double x = i - (size - 1) / 2.0;
    g[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-region separable filter of a single-channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int ow = w - k + 1;
  const int oh = h - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * plane[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

double psnr(const Image& a, const Image& b, double peak) {
  check_same(a, b, "psnr");
  double se = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.data.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Image& a, const Image& b, const SsimOptions& o) {
  check_same(a, b, "ssim");
  if (a.width < o.window || a.height < o.window) throw ShapeError("ssim: image smaller than the window");
  const auto g = gaussian(o.window, o.sigma);
  const double c1 = std::pow(o.k1 * o.dynamic_range, 2);
  const double c2 = std::pow(o.k2 * o.dynamic_range, 2);
  const std::size_t n = a.pixel_count();
  double total = 0.0;
  for (int ch = 0; ch < a.channels; ++ch) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t p = 0; p < n; ++p) {
      x[p] = a.data[p * a.channels + ch];
      y[p] = b.data[p * a.channels + ch];
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    const auto mx = filter_valid(x, a.width, a.height, g);
    const auto my = filter_valid(y, a.width, a.height, g);
    const auto sxx = filter_valid(xx, a.width, a.height, g);
    const auto syy = filter_valid(yy, a.width, a.height, g);
    const auto sxy = filter_valid(xy, a.width, a.height, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cxy = sxy[i] - mx[i] * my[i];
      sum += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / a.channels;
}

MetricReport make_report(const std::vector<Image>& predictions, const std::vector<Image>& targets) {
  if (predictions.size() != targets.size()) throw ShapeError("make_report: prediction/target count mismatch");
  MetricReport r;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    r.psnr.push_back(psnr(predictions[i], targets[i]));
    r.ssim.push_back(ssim(predictions[i], targets[i]));
    r.mean_psnr += r.psnr.back();
    r.mean_ssim += r.ssim.back();
  }
  if (!predictions.empty()) {
    r.mean_psnr /= static_cast<double>(predictions.size());
    r.mean_ssim /= static_cast<double>(predictions.size());
  }
  return r;
}

std::string metric_csv_header() { return "scene,architecture,psnr,ssim,params_M,flops_G,fps,lpips"; }

std::string to_csv(const MetricRow& r) {
  for (const std::string* s : {&r.scene, &r.architecture}) {
    if (s->find_first_of(",\n\r") != std::string::npos) throw ConfigError("metric row: label '" + *s + "' contains a separator");
  }
  return r.scene + "," + r.architecture + "," + fmt(r.psnr) + "," + fmt(r.ssim) + "," + fmt(r.params_M) + "," +
         fmt(r.flops_G) + "," + fmt(r.fps) + ",NA";
}

MetricRow parse_metric_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
  if (f.size() < 7) throw ConfigError("metric row: expected at least 7 fields, got " + std::to_string(f.size()));
  MetricRow r;
  r.scene = f[0];
  r.architecture = f[1];
  try {
    std::size_t pos = 0;
    auto num = [&](const std::string& s) {
      const double v = std::stod(s, &pos);
      if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    };
    r.psnr = num(f[2]);
    r.ssim = num(f[3]);
    r.params_M = num(f[4]);
    r.flops_G = num(f[5]);
    r.fps = num(f[6]);
  } catch (const std::exception&) {
    throw ConfigError("metric row: non-numeric field in '" + line + "'");
  }
  return r;
}

}  // namespace nasnerf
