#include "gibbs_ot/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gibbs_ot/errors.hpp"

namespace gibbs_ot::io {
namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<double> doubles(const json& j, const char* field, const std::string& origin) {
  if (!j.contains(field) || !j[field].is_array())
    throw InputError(origin + ": missing array field '" + field + "'");
  std::vector<double> out;
  for (const auto& v : j[field]) {
    if (!v.is_number()) throw InputError(origin + ": non-numeric entry in '" + field + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line number
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + offset, '\n');
    throw InputError(path.string() + ":" + std::to_string(line) + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& value) {
  write_text(path, value.dump(2) + "\n");
}

json measure_to_json(const DiscreteMeasure& m) {
  json j;
  j["weights"] = m.weights;
  if (m.support) j["support"] = *m.support;
  return j;
}

DiscreteMeasure measure_from_json(const json& j, const std::string& origin) {
  if (!j.is_object()) throw InputError(origin + ": measure must be a JSON object");
  const auto weights = doubles(j, "weights", origin);
  std::optional<std::vector<Point>> support;
  if (j.contains("support") && !j["support"].is_null()) {
    if (!j["support"].is_array()) throw InputError(origin + ": 'support' must be an array");
    std::vector<Point> pts;
    for (const auto& pt : j["support"]) {
      if (!pt.is_array()) throw InputError(origin + ": support point must be an array");
      Point p;
      for (const auto& c : pt) {
        if (!c.is_number()) throw InputError(origin + ": non-numeric support coordinate");
        p.push_back(c.get<double>());
      }
      pts.push_back(std::move(p));
    }
    support = std::move(pts);
  }
  try {
    return make_measure(weights, std::move(support));
  } catch (const std::invalid_argument& e) {
    throw InputError(origin + ": " + e.what());
  }
}

DiscreteMeasure read_measure(const std::filesystem::path& path) {
  return measure_from_json(read_json(path), path.string());
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix matrix_from_csv(const std::string& text, const std::string& origin) {
  std::vector<double> data;
  std::size_t cols = 0, rows = 0, line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      std::string field = line.substr(pos, end - pos);
      field.erase(0, field.find_first_not_of(" \t"));
      field.erase(field.find_last_not_of(" \t") + 1);
      double value = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw InputError(origin + ":" + std::to_string(line_no) + ": column " +
                         std::to_string(count + 1) + ": not a number: '" + field + "'");
      }
      data.push_back(value);
      ++count;
      pos = end + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw InputError(origin + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(cols) + " columns, found " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw InputError(origin + ": empty matrix");
  return Matrix(rows, cols, std::move(data));
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  return matrix_from_csv(read_text(path), path.string());
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  write_text(path, matrix_to_csv(m));
}

json plan_to_json(const TransportPlan& plan) {
  json triples = json::array();
  for (const auto& e : plan.to_triples()) triples.push_back({e.row, e.col, e.mass});
  return {{"triples", triples}, {"shape", {plan.rows, plan.cols}}};
}

TransportPlan plan_from_json(const json& j, PlanSource source) {
  try {
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2) throw InputError("plan: 'shape' must have two entries");
    std::vector<PlanEntry> entries;
    for (const auto& t : j.at("triples")) {
      if (!t.is_array() || t.size() != 3) throw InputError("plan: triple must be [i, j, mass]");
      entries.push_back({t[0].get<std::size_t>(), t[1].get<std::size_t>(), t[2].get<double>()});
    }
    return TransportPlan::from_triples(shape[0], shape[1], std::move(entries), source);
  } catch (const json::exception& e) {
    throw InputError(std::string("plan: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("plan: ") + e.what());
  }
}

json schedule_to_json(const TemperatureSchedule& s) {
  json j{{"kind", to_string(s.kind())}, {"index", s.index()}, {"current", s.current()}};
  switch (s.kind()) {
    case TemperatureSchedule::Kind::geometric:
      j["T0"] = s.T0();
      j["l"] = s.budget();
      j["N"] = s.grid();
      break;
    case TemperatureSchedule::Kind::constant: j["T"] = s.T0(); break;
    case TemperatureSchedule::Kind::adaptive:
      j["eta"] = s.eta();
      j["initial"] = s.T0();
      break;
    case TemperatureSchedule::Kind::epoch_decay:
      j["T0"] = s.T0();
      j["factor"] = s.factor();
      break;
  }
  return j;
}

TemperatureSchedule schedule_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    TemperatureSchedule s = [&] {
      if (kind == "geometric")
        return TemperatureSchedule::geometric(j.at("T0").get<double>(), j.at("l").get<std::size_t>(),
                                              j.at("N").get<std::size_t>());
      if (kind == "constant") return TemperatureSchedule::constant(j.at("T").get<double>());
      if (kind == "adaptive")
        return TemperatureSchedule::adaptive(j.at("eta").get<double>(),
                                             j.value("initial", 0.0));
      if (kind == "epoch-decay")
        return TemperatureSchedule::epoch_decay(j.at("T0").get<double>(),
                                                j.at("factor").get<double>());
      throw InputError("schedule_state: unknown kind '" + kind + "'");
    }();
    s.restore(j.value("index", std::size_t{0}), j.value("current", 0.0));
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("schedule_state: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("schedule_state: ") + e.what());
  }
}

json checkpoint_to_json(const ChainState& state, const std::optional<TemperatureSchedule>& s) {
  json j;
  j["g"] = state.g;
  j["h"] = state.h;
  j["U"] = state.U;
  j["L"] = state.L;
  j["t"] = state.sweeps();
  j["half_steps"] = state.half_steps;
  j["rng_key"] = {{"seed", state.rng.seed}, {"chain", state.rng.chain}};
  j["schedule_state"] = s ? schedule_to_json(*s) : json(nullptr);
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint c;
  try {
    c.state.g = j.at("g").get<std::vector<double>>();
    c.state.h = j.at("h").get<std::vector<double>>();
    c.state.U = j.at("U").get<std::vector<double>>();
    c.state.L = j.at("L").get<std::vector<double>>();
    c.state.half_steps =
        j.contains("half_steps") ? j["half_steps"].get<std::uint64_t>() : 2 * j.at("t").get<std::uint64_t>();
    c.state.rng.seed = j.at("rng_key").at("seed").get<std::uint64_t>();
    c.state.rng.chain = j.at("rng_key").at("chain").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
  if (c.state.g.size() != c.state.U.size() || c.state.h.size() != c.state.L.size())
    throw InputError("checkpoint: g/U or h/L lengths differ");
  if (j.contains("schedule_state") && !j["schedule_state"].is_null())
    c.schedule = schedule_from_json(j["schedule_state"]);
  return c;
}

json trace_to_json(const TraceRecord& r) {
  return {{"n", r.n}, {"T", r.T}, {"V_z", r.V_z}, {"V_gh", r.V_gh}, {"feas", r.feas}};
}

json epoch_to_json(const EpochReport& r) {
  return {{"epoch", r.epoch},
          {"T", r.T},
          {"objective_proxy", r.objective_proxy},
          {"exact_objective", r.exact_objective ? json(*r.exact_objective) : json(nullptr)},
          {"sweeps_total", r.sweeps_total}};
}

json model_to_json(const NMFModel& m) {
  return {{"shared_support", m.shared_support},
          {"components", m.components},
          {"memberships", m.memberships},
          {"T", m.temperature},
          {"epoch", m.epoch}};
}

NMFModel model_from_json(const json& j) {
  NMFModel m;
  try {
    m.shared_support = j.at("shared_support").get<std::vector<Point>>();
    m.components = j.at("components").get<std::vector<std::vector<double>>>();
    m.memberships = j.at("memberships").get<std::vector<std::vector<double>>>();
    m.temperature = j.at("T").get<double>();
    m.epoch = j.at("epoch").get<std::size_t>();
  } catch (const json::exception& e) {
    throw InputError(std::string("model: ") + e.what());
  }
  return m;
}

Raster parse_pgm(const std::string& bytes, const std::string& origin) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw InputError(origin + ": truncated PGM header");
    return bytes.substr(start, pos - start);
  };
  auto next_int = [&]() {
    const std::string tok = next_token();
    long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || v < 0) throw InputError(origin + ": bad PGM integer '" + tok + "'");
    return static_cast<std::size_t>(v);
  };

  const std::string magic = next_token();
  if (magic != "P2" && magic != "P5") throw InputError(origin + ": not a PGM file");
  Raster r;
  r.cols = next_int();
  r.rows = next_int();
  const std::size_t maxval = next_int();
  if (r.rows == 0 || r.cols == 0 || maxval == 0 || maxval > 65535)
    throw InputError(origin + ": invalid PGM dimensions");
  const std::size_t count = r.rows * r.cols;
  r.pixels.reserve(count);
  if (magic == "P2") {
    for (std::size_t k = 0; k < count; ++k) r.pixels.push_back(static_cast<double>(next_int()));
  } else {
    ++pos;  // single whitespace after maxval
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (bytes.size() < pos + count * bpp) throw InputError(origin + ": truncated PGM raster");
    for (std::size_t k = 0; k < count; ++k) {
      const auto* b = reinterpret_cast<const unsigned char*>(bytes.data() + pos + k * bpp);
      r.pixels.push_back(bpp == 2 ? static_cast<double>(b[0] << 8 | b[1]) : b[0]);
    }
  }
  return r;
}

Raster read_raster(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm") return parse_pgm(read_text(path), path.string());
  if (ext == ".csv") {
    const Matrix m = read_matrix_csv(path);
    return Raster{m.rows(), m.cols(), m.data()};
  }
  throw InputError(path.string() + ": unsupported raster format (expected .pgm or .csv)");
}

std::vector<Point> pixel_grid(std::size_t rows, std::size_t cols) {
  const double side = static_cast<double>(std::max(rows, cols));
  std::vector<Point> pts;
  pts.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      pts.push_back({(static_cast<double>(r) + 0.5) / side, (static_cast<double>(c) + 0.5) / side});
  return pts;
}

DiscreteMeasure raster_to_measure(const Raster& raster) {
  return make_measure(raster.pixels, pixel_grid(raster.rows, raster.cols));
}

}  // namespace gibbs_ot::io
