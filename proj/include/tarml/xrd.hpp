#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tarml::xrd {

// Digitized diffraction trace: x is 2-theta in degrees (strictly increasing),
// y is intensity in arbitrary units.
struct XrdCurve {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
};

enum class PeakLabel { kCrystalline, kAmorphous };

std::string_view to_string(PeakLabel label);

// y = baseline + area / (width * sqrt(pi/2)) * exp(-2 (x - center)^2 / width^2)
struct GaussianPeak {
  double baseline = 0.0;  // y0, intensity
  double center = 0.0;    // xc, degrees 2-theta
  double width = 0.0;     // w, degrees
  double area = 0.0;      // A, intensity * degrees
  PeakLabel label = PeakLabel::kCrystalline;

  double operator()(double x) const;
};

struct Window {
  double lo = 0.0;
  double hi = 0.0;
  PeakLabel label = PeakLabel::kCrystalline;
};

struct FitOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
};

struct FitResult {
  GaussianPeak peak;
  double initial_residual = 0.0;  // sum of squares at the initial guess
  double residual = 0.0;          // sum of squares at the returned parameters
  int iterations = 0;
};

// Damped Gauss-Newton on (y0, xc, w, A) over the points of `curve` inside
// `window`. Needs at least 8 points and a local maximum strictly inside the
// window.
FitResult fit_gaussian_detailed(const XrdCurve& curve, const Window& window, const FitOptions& options = {});
GaussianPeak fit_gaussian(const XrdCurve& curve, const Window& window, const FitOptions& options = {});

// Full width at half maximum in degrees: w * sqrt(2 ln 2).
double fwhm(const GaussianPeak& peak);

inline constexpr double kDefaultShapeFactor = 0.9;
inline constexpr double kCuKalphaWavelengthNm = 0.15406;
inline constexpr double kScherrerValidityLimitNm = 200.0;

struct CrystalSize {
  double nm = 0.0;
  bool valid = true;  // false when nm >= 200
};

// D = K * lambda / (beta * cos(theta)); beta and theta in radians.
CrystalSize scherrer_size(double beta, double theta, double shape_factor = kDefaultShapeFactor,
                          double wavelength_nm = kCuKalphaWavelengthNm);

// 100 * crystalline area / total area.
double crystallinity_index(const std::vector<GaussianPeak>& peaks);

struct PeakReport {
  GaussianPeak peak;
  double fwhm_deg = 0.0;
  double beta_rad = 0.0;
  double theta_rad = 0.0;
  CrystalSize size;  // meaningful for crystalline peaks only
};

struct XrdReport {
  std::vector<PeakReport> peaks;
  double average_size_nm = 0.0;  // mean over crystalline peaks
  bool average_valid = true;     // every crystalline peak was below the validity limit
  double crystallinity_index = 0.0;
  double shape_factor = kDefaultShapeFactor;
  double wavelength_nm = kCuKalphaWavelengthNm;

  // Flat "key = value" lines; see docs/formats.md.
  std::string to_text() const;
  // Two-line CSV fragment with the crystal-size and crystallinity columns of
  // the dataset schema.
  std::string to_row_fragment() const;
};

XrdReport analyze_curve(const XrdCurve& curve, const std::vector<Window>& windows,
                        double shape_factor = kDefaultShapeFactor,
                        double wavelength_nm = kCuKalphaWavelengthNm);

// Two-column CSV (2-theta, intensity); a non-numeric first line is a header.
XrdCurve parse_curve(std::string_view text);
// Lines "<lo> <hi> <crystalline|amorphous>"; '#' starts a comment.
std::vector<Window> parse_windows(std::string_view text);

}  // namespace tarml::xrd
