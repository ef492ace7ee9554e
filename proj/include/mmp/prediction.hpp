#pragma once

#include "mmp/geometry.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmp {

class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct TrackSample {
  double time = 0.0;
  Point2 position = Point2::Zero();
};

/// Observed history of one moving obstacle; timestamps strictly increasing.
struct ObstacleTrack {
  std::string id;
  std::vector<TrackSample> history;
  double radius = 0.3;

  const Point2& current() const { return history.back().position; }
  void validate() const;
};

enum class EfrsSource { Cvm, ProbMap };

/// Estimated forward reachable set: a closed CCW boundary ring.
struct Efrs {
  std::string obstacle_id;
  Polyline boundary;
  double tau_max = 0.0;
  EfrsSource source = EfrsSource::Cvm;
};

/// Per-step occupancy probability maps sharing one raster layout.
struct ProbMapStack {
  std::vector<ScalarGrid> maps;
  double step_duration = 0.2;

  void validate() const;
};

struct CvmShape {
  double margin = 0.1;
  /// Extra half-width at mid-horizon per metre of predicted travel.
  double spread = 0.25;
  std::size_t max_points = 200;
  /// Target spacing of boundary samples; 0 always emits max_points.
  double spacing = 0.0;
};

/// Least-squares velocity over the last (up to) 8 samples; zero for a single sample.
Vec2 cvm_velocity(const ObstacleTrack& track);

/// Rhombus-shaped reachable set around the constant-velocity centerline.
Efrs cvm_efrs(const ObstacleTrack& track, double tau_max, const CvmShape& shape = {});
Efrs cvm_efrs(const ObstacleTrack& track, double tau_max, double margin);

/// Sums the stack into one occupancy map and returns one EFRS per outer contour
/// at level delta_kappa.
std::vector<Efrs> probmap_efrs(const ProbMapStack& stack, double delta_kappa, std::size_t max_points = 200);

ScalarGrid occupancy_sum(const ProbMapStack& stack);
/// 10% of the largest summed occupancy cell.
double default_delta_kappa(const ProbMapStack& stack);

ProbMapStack load_probmap_stack(const std::filesystem::path& path);
ProbMapStack read_probmap_stack(std::istream& in);

enum class ProbMapEncoding { Ascii, Binary };
void save_probmap_stack(const ProbMapStack& stack, const std::filesystem::path& path,
                        ProbMapEncoding encoding = ProbMapEncoding::Ascii);

}  // namespace mmp
