#include "tarml/xrd.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tarml/data/csv.hpp"
#include "tarml/data/dataset.hpp"
#include "tarml/error.hpp"

namespace tarml::xrd {

namespace {

const double kSqrtHalfPi = std::sqrt(std::numbers::pi / 2.0);

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

using Params = Eigen::Vector4d;  // y0, xc, w, A

double model(const Params& p, double x) {
  const double d = x - p[1];
  return p[0] + p[3] / (p[2] * kSqrtHalfPi) * std::exp(-2.0 * d * d / (p[2] * p[2]));
}

double sum_squares(const Params& p, const std::vector<double>& xs, const std::vector<double>& ys) {
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - model(p, xs[i]);
    s += r * r;
  }
  return s;
}

}  // namespace

std::string_view to_string(PeakLabel label) {
  return label == PeakLabel::kCrystalline ? "crystalline" : "amorphous";
}

double GaussianPeak::operator()(double x) const {
  return model(Params{baseline, center, width, area}, x);
}

FitResult fit_gaussian_detailed(const XrdCurve& curve, const Window& window, const FitOptions& options) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve.x[i] >= window.lo && curve.x[i] <= window.hi) {
      xs.push_back(curve.x[i]);
      ys.push_back(curve.y[i]);
    }
  }
  if (xs.size() < 8) {
    throw Error("window [" + data::format_number(window.lo) + ", " + data::format_number(window.hi) +
                "] too narrow: " + std::to_string(xs.size()) + " points, need at least 8");
  }

  const auto max_it = std::max_element(ys.begin(), ys.end());
  const auto peak_index = static_cast<std::size_t>(max_it - ys.begin());
  const double y_min = *std::min_element(ys.begin(), ys.end());
  if (peak_index == 0 || peak_index + 1 == ys.size() || !(*max_it > ys.front()) ||
      !(*max_it > ys.back())) {
    throw Error("no interior local maximum in window [" + data::format_number(window.lo) + ", " +
                data::format_number(window.hi) + "]");
  }

  Params p;
  p[0] = y_min;
  p[1] = xs[peak_index];
  p[2] = (xs.back() - xs.front()) / 4.0;
  p[3] = (*max_it - y_min) * p[2] * kSqrtHalfPi;

  FitResult result;
  double ssr = sum_squares(p, xs, ys);
  result.initial_residual = ssr;
  double damping = 1e-3;

  for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
    if (ssr == 0.0) break;
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
    Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
    const double w = p[2];
    const double scale = p[3] / (w * kSqrtHalfPi);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = xs[i] - p[1];
      const double g = std::exp(-2.0 * d * d / (w * w));
      Eigen::Vector4d j;
      j[0] = 1.0;
      j[1] = scale * g * 4.0 * d / (w * w);
      j[2] = scale * g * (4.0 * d * d / (w * w * w) - 1.0 / w);
      j[3] = g / (w * kSqrtHalfPi);
      const double r = ys[i] - (p[0] + scale * g);
      jtj.noalias() += j * j.transpose();
      jtr.noalias() += j * r;
    }

    bool accepted = false;
    while (damping < 1e16) {
      Eigen::Matrix4d a = jtj;
      a.diagonal() += damping * jtj.diagonal().cwiseMax(1e-300);
      const Params step = a.ldlt().solve(jtr);
      const Params trial = p + step;
      const double trial_ssr = step.allFinite() ? sum_squares(trial, xs, ys) : INFINITY;
      if (std::isfinite(trial_ssr) && trial_ssr < ssr) {
        const double change = (ssr - trial_ssr) / ssr;
        p = trial;
        ssr = trial_ssr;
        damping = std::max(damping / 3.0, 1e-12);
        accepted = true;
        if (change < options.relative_tolerance) damping = 1e16;  // converged
        break;
      }
      damping *= 4.0;
    }
    if (!accepted || damping >= 1e16) {
      ++result.iterations;
      break;
    }
  }

  if (!p.allFinite()) throw Error("gaussian fit diverged (non-finite parameters)");
  if (p[2] < 0.0) {
    p[2] = -p[2];
    p[3] = -p[3];
  }
  if (!(p[2] > 0.0) || !(p[3] > 0.0)) {
    throw Error("gaussian fit diverged (non-positive width or area)");
  }
  if (p[1] < curve.x.front() || p[1] > curve.x.back()) {
    throw Error("gaussian fit diverged (center outside the curve range)");
  }
  result.peak = {p[0], p[1], p[2], p[3], window.label};
  result.residual = ssr;
  return result;
}

GaussianPeak fit_gaussian(const XrdCurve& curve, const Window& window, const FitOptions& options) {
  return fit_gaussian_detailed(curve, window, options).peak;
}

double fwhm(const GaussianPeak& peak) {
  if (!(peak.width > 0.0)) throw Error("peak width must be positive");
  return peak.width * std::sqrt(2.0 * std::numbers::ln2);
}

CrystalSize scherrer_size(double beta, double theta, double shape_factor, double wavelength_nm) {
  if (!(beta > 0.0)) throw Error("FWHM (beta) must be positive");
  if (!(theta > 0.0 && theta < std::numbers::pi / 2.0)) {
    throw Error("Bragg angle theta must lie in (0, pi/2) radians");
  }
  if (!(shape_factor > 0.0) || !(wavelength_nm > 0.0)) {
    throw Error("shape factor and wavelength must be positive");
  }
  const double d = shape_factor * wavelength_nm / (beta * std::cos(theta));
  return {d, d < kScherrerValidityLimitNm};
}

double crystallinity_index(const std::vector<GaussianPeak>& peaks) {
  if (peaks.empty()) throw Error("crystallinity index needs at least one peak");
  double crystalline = 0.0;
  double total = 0.0;
  for (const auto& p : peaks) {
    if (!(p.area > 0.0)) throw Error("peak areas must be positive");
    total += p.area;
    if (p.label == PeakLabel::kCrystalline) crystalline += p.area;
  }
  if (!(total > 0.0)) throw Error("total peak area is zero");
  return 100.0 * crystalline / total;
}

XrdReport analyze_curve(const XrdCurve& curve, const std::vector<Window>& windows, double shape_factor,
                        double wavelength_nm) {
  const bool any_crystalline = std::any_of(windows.begin(), windows.end(), [](const Window& w) {
    return w.label == PeakLabel::kCrystalline;
  });
  if (!any_crystalline) throw Error("at least one crystalline window is required");

  XrdReport report;
  report.shape_factor = shape_factor;
  report.wavelength_nm = wavelength_nm;
  std::vector<GaussianPeak> fitted;
  double size_sum = 0.0;
  std::size_t crystalline_count = 0;
  for (const auto& w : windows) {
    PeakReport pr;
    pr.peak = fit_gaussian(curve, w);
    pr.fwhm_deg = fwhm(pr.peak);
    pr.beta_rad = deg_to_rad(pr.fwhm_deg);
    pr.theta_rad = deg_to_rad(pr.peak.center / 2.0);
    if (w.label == PeakLabel::kCrystalline) {
      pr.size = scherrer_size(pr.beta_rad, pr.theta_rad, shape_factor, wavelength_nm);
      size_sum += pr.size.nm;
      ++crystalline_count;
      report.average_valid = report.average_valid && pr.size.valid;
    } else {
      pr.size = {0.0, false};
    }
    fitted.push_back(pr.peak);
    report.peaks.push_back(pr);
  }
  report.average_size_nm = size_sum / static_cast<double>(crystalline_count);
  report.crystallinity_index = crystallinity_index(fitted);
  return report;
}

std::string XrdReport::to_text() const {
  using data::format_number;
  std::ostringstream out;
  out << "format = tarml-xrd-report\n";
  out << "version = v1\n";
  out << "shape_factor = " << format_number(shape_factor) << "\n";
  out << "wavelength_nm = " << format_number(wavelength_nm) << "\n";
  out << "peak_count = " << peaks.size() << "\n";
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const auto& p = peaks[i];
    const std::string k = "peak." + std::to_string(i) + ".";
    out << k << "label = " << to_string(p.peak.label) << "\n";
    out << k << "y0 = " << format_number(p.peak.baseline) << "\n";
    out << k << "xc_deg = " << format_number(p.peak.center) << "\n";
    out << k << "w_deg = " << format_number(p.peak.width) << "\n";
    out << k << "area = " << format_number(p.peak.area) << "\n";
    out << k << "fwhm_deg = " << format_number(p.fwhm_deg) << "\n";
    out << k << "beta_rad = " << format_number(p.beta_rad) << "\n";
    out << k << "theta_rad = " << format_number(p.theta_rad) << "\n";
    if (p.peak.label == PeakLabel::kCrystalline) {
      out << k << "size_nm = " << format_number(p.size.nm) << "\n";
      out << k << "size_valid = " << (p.size.valid ? "true" : "false") << "\n";
    }
  }
  out << "average_size_nm = " << format_number(average_size_nm) << "\n";
  out << "average_size_valid = " << (average_valid ? "true" : "false") << "\n";
  out << "crystallinity_index_pct = " << format_number(crystallinity_index) << "\n";
  return out.str();
}

std::string XrdReport::to_row_fragment() const {
  const auto schema = data::FeatureSchema::canonical();
  return schema.features()[0].name + "," + schema.features()[1].name + "\n" +
         data::format_number(average_size_nm) + "," + data::format_number(crystallinity_index) + "\n";
}

namespace {

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

XrdCurve parse_curve(std::string_view text) {
  XrdCurve c;
  const auto lines = data::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto cells = data::split_csv_row(lines[i].text);
    if (cells.size() == 1) cells = data::split_csv_row(lines[i].text, '\t');
    double x = 0.0, y = 0.0;
    const bool ok = cells.size() >= 2 && parse_double(cells[0], x) && parse_double(cells[1], y);
    if (!ok) {
      if (i == 0) continue;  // header
      throw ParseError("curve line " + std::to_string(lines[i].number) + ": expected two numbers",
                       lines[i].number, 0);
    }
    if (!c.x.empty() && !(x > c.x.back())) {
      throw ParseError("curve line " + std::to_string(lines[i].number) +
                           ": 2-theta values must be strictly increasing",
                       lines[i].number, 1);
    }
    c.x.push_back(x);
    c.y.push_back(y);
  }
  if (c.x.empty()) throw ParseError("curve file has no data", 1, 0);
  return c;
}

std::vector<Window> parse_windows(std::string_view text) {
  std::vector<Window> out;
  for (const auto& line : data::split_lines(text)) {
    std::string_view body = line.text.substr(0, line.text.find('#'));
    std::istringstream in{std::string(body)};
    std::string lo, hi, label;
    if (!(in >> lo)) continue;
    Window w;
    if (!(in >> hi >> label) || !parse_double(lo, w.lo) || !parse_double(hi, w.hi) || !(w.hi > w.lo)) {
      throw ParseError("window line " + std::to_string(line.number) +
                           ": expected \"<x_lo> <x_hi> <crystalline|amorphous>\"",
                       line.number, 0);
    }
    if (label == "crystalline") {
      w.label = PeakLabel::kCrystalline;
    } else if (label == "amorphous") {
      w.label = PeakLabel::kAmorphous;
    } else {
      throw ParseError("window line " + std::to_string(line.number) + ": unknown label \"" + label + "\"",
                       line.number, 3);
    }
    out.push_back(w);
  }
  if (out.empty()) throw ParseError("window file has no windows", 1, 0);
  return out;
}

}  // namespace tarml::xrd
