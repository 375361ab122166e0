#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbs_ot/annealing_analysis.hpp"
#include "gibbs_ot/gibbs_sampler.hpp"
#include "gibbs_ot/matrix.hpp"
#include "gibbs_ot/ot_core.hpp"
#include "gibbs_ot/schedule.hpp"
#include "gibbs_ot/wlm_nmf.hpp"

namespace gibbs_ot::io {

using json = nlohmann::json;

// Parse failures throw InputError with the file name and, for text formats,
// the 1-based line number.

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& value);

// {"weights": [...], "support": [[...], ...]}
json measure_to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const json& j, const std::string& origin = "<json>");
DiscreteMeasure read_measure(const std::filesystem::path& path);

// Row-major CSV, no header, 17 significant digits.
std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(const std::string& text, const std::string& origin = "<csv>");
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

// {"triples": [[i, j, mass], ...], "shape": [m1, m2]}, 0-based.
json plan_to_json(const TransportPlan& plan);
TransportPlan plan_from_json(const json& j, PlanSource source = PlanSource::exact);

json schedule_to_json(const TemperatureSchedule& s);
TemperatureSchedule schedule_from_json(const json& j);

struct Checkpoint {
  ChainState state;
  std::optional<TemperatureSchedule> schedule;
};

// {g, h, U, L, t, half_steps, rng_key: {seed, chain}, schedule_state}
json checkpoint_to_json(const ChainState& state, const std::optional<TemperatureSchedule>& s);
Checkpoint checkpoint_from_json(const json& j);

json trace_to_json(const TraceRecord& r);
json epoch_to_json(const EpochReport& r);
json model_to_json(const NMFModel& m);
NMFModel model_from_json(const json& j);

/// Grayscale raster, row-major.
struct Raster {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> pixels;
};

/// Reads PGM (P2 or P5) or CSV by extension.
Raster read_raster(const std::filesystem::path& path);
Raster parse_pgm(const std::string& bytes, const std::string& origin);

/// Pixel intensities as a measure on the pixel grid (coordinates
/// ((r + 0.5) / side, (c + 0.5) / side) with side = max(rows, cols)).
DiscreteMeasure raster_to_measure(const Raster& raster);
std::vector<Point> pixel_grid(std::size_t rows, std::size_t cols);

}  // namespace gibbs_ot::io
