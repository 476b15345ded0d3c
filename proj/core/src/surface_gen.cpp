#include "sabrnet/surface_gen.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "sabrnet/parallel.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset format is little-endian; big-endian hosts are unsupported");

namespace sabrnet {

void GenHyper::validate() const {
  if (m < 1 || n < 2) throw DomainError("GenHyper: need m >= 1 and n >= 2");
  if (!(alpha0_min > 0.0) || !(alpha0_min <= alpha0_max))
    throw DomainError("GenHyper: bad alpha0 range");
  if (!(nu_min >= 0.0) || !(nu_min <= nu_max)) throw DomainError("GenHyper: bad nu range");
  if (!(rho_min > -1.0) || !(rho_max < 1.0) || !(rho_min <= rho_max))
    throw DomainError("GenHyper: bad rho range");
  if (!(t_last > 0.0)) throw DomainError("GenHyper: t_last must be > 0");
  if (!(eta_min > 0.0) || !(eta_min <= eta_max)) throw DomainError("GenHyper: bad eta range");
  if (!(dt > 0.0)) throw DomainError("GenHyper: dt must be > 0");
  if (!(dt < t_last / m)) throw DomainError("GenHyper: dt must be below the row spacing");
}

std::string to_string(DatasetRole role) {
  switch (role) {
    case DatasetRole::train: return "train";
    case DatasetRole::validate: return "validate";
    case DatasetRole::test: return "test";
    case DatasetRole::test_accurate: return "test-accurate";
  }
  throw DomainError("unknown dataset role");
}

DatasetRole role_from_string(const std::string& name) {
  if (name == "train") return DatasetRole::train;
  if (name == "validate") return DatasetRole::validate;
  if (name == "test") return DatasetRole::test;
  if (name == "test-accurate") return DatasetRole::test_accurate;
  throw DomainError("unknown dataset role: " + name);
}

std::size_t Dataset::total_points() const {
  std::size_t total = 0;
  for (const auto& s : surfaces) total += s.iv.size();
  return total;
}

std::size_t Dataset::excluded_points() const {
  std::size_t excluded = 0;
  for (const auto& s : surfaces)
    for (const auto flag : s.mask) excluded += flag;
  return excluded;
}

namespace {

double uniform_in(rng::Xoshiro256pp& rng, double lo, double hi) {
  return lo + rng.uniform() * (hi - lo);
}

/// expm1(x)/x-style ratio with a series branch for tiny x, so the nu -> 0
/// limit reduces to the lognormal-with-constant-vol grid.
double growth_ratio(double x, double maturity) {
  if (x < 1e-10) return maturity * (1.0 + 0.5 * x);
  return std::expm1(x) * maturity / x;
}

}  // namespace

SurfaceSpec sample_spec(const GenHyper& hyper, rng::Xoshiro256pp& rng, std::uint64_t surface_id) {
  hyper.validate();

  SurfaceSpec spec;
  spec.surface_id = surface_id;
  spec.m = hyper.m;
  spec.n = hyper.n;
  spec.params.alpha0 = uniform_in(rng, hyper.alpha0_min, hyper.alpha0_max);
  spec.params.nu = uniform_in(rng, hyper.nu_min, hyper.nu_max);
  spec.params.rho = uniform_in(rng, hyper.rho_min, hyper.rho_max);
  spec.eta_f = uniform_in(rng, hyper.eta_min, hyper.eta_max);

  const double delta_t = hyper.t_last / hyper.m;
  // First maturity is drawn above dt so every row is simulatable.
  const double t_first = uniform_in(rng, hyper.dt, delta_t);
  spec.maturities.resize(static_cast<std::size_t>(hyper.m));
  for (int row = 0; row < hyper.m; ++row)
    spec.maturities[static_cast<std::size_t>(row)] = t_first + row * delta_t;

  const double alpha0 = spec.params.alpha0;
  const double nu = spec.params.nu;
  spec.strikes.resize(static_cast<std::size_t>(hyper.m) * hyper.n);
  for (int row = 0; row < hyper.m; ++row) {
    const double maturity = spec.maturities[static_cast<std::size_t>(row)];
    const double x = nu * nu;  // nu_tilde^2 * T with nu_tilde = nu / sqrt(T)
    const double r = growth_ratio(x, maturity);
    const double half_width = spec.eta_f * alpha0 * std::sqrt(r);
    const double drift_low = hyper.literal_k1_exponent ? -0.5 * alpha0 * r : -0.5 * alpha0 * alpha0 * r;
    const double drift = -0.5 * alpha0 * alpha0 * r;
    const double k_lo = std::exp(drift_low - half_width);
    const double k_hi = std::exp(drift + half_width);
    const int divisor = hyper.literal_dk_divisor ? hyper.n : hyper.n - 1;
    const double dk = (k_hi - k_lo) / divisor;
    for (int col = 0; col < hyper.n; ++col)
      spec.strikes[static_cast<std::size_t>(row) * hyper.n + col] = k_lo + col * dk;
  }
  return spec;
}

Dataset generate_dataset(const GenHyper& hyper, std::uint64_t count, const SimConfig& cfg,
                         DatasetRole role, int workers, GenStats* stats) {
  hyper.validate();
  cfg.validate();
  if (count < 1) throw DomainError("generate_dataset: count must be >= 1");

  Dataset ds;
  ds.hyper = hyper;
  ds.n_paths = cfg.n_paths;
  ds.dt = hyper.dt;  // generation always steps at the hyper's dt
  ds.master_seed = cfg.seed;
  ds.role = role;
  ds.surfaces.resize(count);

  // Specs are sampled sequentially from a dedicated stream so the draw order
  // never depends on simulation scheduling.
  rng::Xoshiro256pp spec_rng(rng::mix_seed(cfg.seed, 0x53504543ULL /* "SPEC" */,
                                           static_cast<std::uint64_t>(role)));
  std::vector<SurfaceSpec> specs;
  specs.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) specs.push_back(sample_spec(hyper, spec_rng, i));

  SimConfig sim_cfg = cfg;
  sim_cfg.dt = hyper.dt;
  parallel_for(count, workers,
               [&](std::size_t i) { ds.surfaces[i] = mc_surface(specs[i], sim_cfg, 1); });

  if (stats != nullptr) {
    stats->total_points = ds.total_points();
    stats->excluded_points = ds.excluded_points();
  }
  return ds;
}

namespace {

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot open for writing: " + path.string());
  }
  void bytes(const void* data, std::size_t size) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v) { bytes(&v, 2); }
  void i32(std::int32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void check() {
    if (!out_) throw DataError("write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open for reading: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    data_ = buf.str();
  }
  void bytes(void* dst, std::size_t size) {
    if (offset_ + size > data_.size())
      throw DataError("dataset file truncated at offset " + std::to_string(offset_));
    std::memcpy(dst, data_.data() + offset_, size);
    offset_ += size;
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint16_t u16() { std::uint16_t v; bytes(&v, 2); return v; }
  std::int32_t i32() { std::int32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  bool at_end() const { return offset_ == data_.size(); }
  std::size_t offset() const { return offset_; }

 private:
  std::string data_;
  std::size_t offset_ = 0;
};

constexpr char kMagic[6] = {'S', 'A', 'B', 'R', 'D', 'S'};

void write_hyper(Writer& w, const GenHyper& hyper) {
  w.i32(hyper.m);
  w.i32(hyper.n);
  w.f64(hyper.alpha0_min);
  w.f64(hyper.alpha0_max);
  w.f64(hyper.nu_min);
  w.f64(hyper.nu_max);
  w.f64(hyper.rho_min);
  w.f64(hyper.rho_max);
  w.f64(hyper.t_last);
  w.f64(hyper.eta_min);
  w.f64(hyper.eta_max);
  w.f64(hyper.dt);
  w.u8(hyper.literal_k1_exponent ? 1 : 0);
  w.u8(hyper.literal_dk_divisor ? 1 : 0);
}

GenHyper read_hyper(Reader& r) {
  GenHyper hyper;
  hyper.m = r.i32();
  hyper.n = r.i32();
  hyper.alpha0_min = r.f64();
  hyper.alpha0_max = r.f64();
  hyper.nu_min = r.f64();
  hyper.nu_max = r.f64();
  hyper.rho_min = r.f64();
  hyper.rho_max = r.f64();
  hyper.t_last = r.f64();
  hyper.eta_min = r.f64();
  hyper.eta_max = r.f64();
  hyper.dt = r.f64();
  hyper.literal_k1_exponent = r.u8() != 0;
  hyper.literal_dk_divisor = r.u8() != 0;
  return hyper;
}

}  // namespace

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  Writer w(path);
  w.bytes(kMagic, sizeof(kMagic));
  w.u16(kDatasetFormatVersion);
  write_hyper(w, ds.hyper);
  w.u8(static_cast<std::uint8_t>(ds.role));
  w.u64(ds.master_seed);
  w.u64(ds.surfaces.size());
  w.u64(ds.n_paths);
  w.f64(ds.dt);

  const std::size_t grid = static_cast<std::size_t>(ds.hyper.m) * ds.hyper.n;
  for (const auto& surface : ds.surfaces) {
    const auto& spec = surface.spec;
    w.u64(spec.surface_id);
    w.f64(spec.params.alpha0);
    w.f64(spec.params.nu);
    w.f64(spec.params.rho);
    w.f64(spec.eta_f);
    w.bytes(spec.maturities.data(), spec.maturities.size() * sizeof(double));
    w.bytes(spec.strikes.data(), spec.strikes.size() * sizeof(double));
    w.bytes(surface.iv.data(), surface.iv.size() * sizeof(double));
    w.bytes(surface.noise.data(), surface.noise.size() * sizeof(double));
    std::vector<std::uint8_t> bits((grid + 7) / 8, 0);
    for (std::size_t i = 0; i < grid; ++i)
      if (surface.mask[i] != 0) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    w.bytes(bits.data(), bits.size());
  }
  w.check();
}

Dataset read_dataset(const std::filesystem::path& path) {
  Reader r(path);
  char magic[6];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a dataset file (bad magic): " + path.string());
  const std::uint16_t version = r.u16();
  if (version != kDatasetFormatVersion)
    throw DataError("dataset format version " + std::to_string(version) +
                    " unsupported (expected " + std::to_string(kDatasetFormatVersion) + ")");

  Dataset ds;
  ds.hyper = read_hyper(r);
  const std::uint8_t role = r.u8();
  if (role > 3) throw DataError("bad role tag at offset " + std::to_string(r.offset()));
  ds.role = static_cast<DatasetRole>(role);
  ds.master_seed = r.u64();
  const std::uint64_t count = r.u64();
  ds.n_paths = r.u64();
  ds.dt = r.f64();

  const std::size_t grid = static_cast<std::size_t>(ds.hyper.m) * ds.hyper.n;
  ds.surfaces.resize(count);
  for (auto& surface : ds.surfaces) {
    auto& spec = surface.spec;
    spec.m = ds.hyper.m;
    spec.n = ds.hyper.n;
    spec.surface_id = r.u64();
    spec.params.alpha0 = r.f64();
    spec.params.nu = r.f64();
    spec.params.rho = r.f64();
    spec.eta_f = r.f64();
    spec.maturities.resize(static_cast<std::size_t>(ds.hyper.m));
    r.bytes(spec.maturities.data(), spec.maturities.size() * sizeof(double));
    spec.strikes.resize(grid);
    r.bytes(spec.strikes.data(), grid * sizeof(double));
    surface.iv.resize(grid);
    r.bytes(surface.iv.data(), grid * sizeof(double));
    surface.noise.resize(grid);
    r.bytes(surface.noise.data(), grid * sizeof(double));
    std::vector<std::uint8_t> bits((grid + 7) / 8);
    r.bytes(bits.data(), bits.size());
    surface.mask.resize(grid);
    for (std::size_t i = 0; i < grid; ++i)
      surface.mask[i] = (bits[i / 8] >> (i % 8)) & 1u;
    surface.n_paths = ds.n_paths;
  }
  if (!r.at_end())
    throw DataError("trailing bytes after dataset at offset " + std::to_string(r.offset()));
  return ds;
}

Dataset subset(const Dataset& ds, double fraction) {
  int shift = -1;
  for (int k = 0; k <= 40; ++k) {
    if (std::abs(fraction - std::ldexp(1.0, -k)) < 1e-12) {
      shift = k;
      break;
    }
  }
  if (shift < 0) throw DomainError("subset: fraction must be 1/2^k");
  const std::size_t keep = ds.surfaces.size() >> shift;
  if (keep == 0) throw DomainError("subset: empty result");

  Dataset out = ds;
  out.surfaces.assign(ds.surfaces.begin(), ds.surfaces.begin() + static_cast<long>(keep));
  return out;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "surface_id,k1,k2,T,K,alpha0,nu,rho,iv,noise,excluded\n";
  char line[512];
  for (const auto& surface : ds.surfaces) {
    const auto& spec = surface.spec;
    for (int row = 0; row < spec.m; ++row) {
      for (int col = 0; col < spec.n; ++col) {
        const std::size_t idx = static_cast<std::size_t>(row) * spec.n + col;
        std::snprintf(line, sizeof(line),
                      "%" PRIu64 ",%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      spec.surface_id, row + 1, col + 1, spec.maturities[static_cast<std::size_t>(row)],
                      spec.strike(row, col), spec.params.alpha0, spec.params.nu, spec.params.rho,
                      surface.iv[idx], surface.noise[idx], surface.mask[idx] != 0 ? 1 : 0);
        out << line;
      }
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("surface_id,", 0) != 0)
    throw DataError("bad CSV header: " + path.string());

  struct Cell {
    int k1, k2;
    double maturity, strike, alpha0, nu, rho, iv, noise;
    bool excluded;
  };
  std::map<std::uint64_t, std::vector<Cell>> grouped;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Cell cell{};
    std::uint64_t id = 0;
    int excluded = 0;
    const int got = std::sscanf(line.c_str(),
                                "%" SCNu64 ",%d,%d,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%d", &id, &cell.k1,
                                &cell.k2, &cell.maturity, &cell.strike, &cell.alpha0, &cell.nu,
                                &cell.rho, &cell.iv, &cell.noise, &excluded);
    if (got != 11)
      throw DataError("bad CSV row at line " + std::to_string(line_no) + ": " + path.string());
    cell.excluded = excluded != 0;
    grouped[id].push_back(cell);
  }
  if (grouped.empty()) throw DataError("empty CSV: " + path.string());

  Dataset ds;
  for (auto& [id, cells] : grouped) {
    int m = 0, n = 0;
    for (const auto& cell : cells) {
      m = std::max(m, cell.k1);
      n = std::max(n, cell.k2);
    }
    IvSurface surface;
    auto& spec = surface.spec;
    spec.surface_id = id;
    spec.m = m;
    spec.n = n;
    spec.params.alpha0 = cells.front().alpha0;
    spec.params.nu = cells.front().nu;
    spec.params.rho = cells.front().rho;
    const std::size_t grid = static_cast<std::size_t>(m) * n;
    spec.maturities.assign(static_cast<std::size_t>(m), 0.0);
    spec.strikes.assign(grid, 0.0);
    surface.iv.assign(grid, std::numeric_limits<double>::quiet_NaN());
    surface.noise.assign(grid, 0.0);
    surface.mask.assign(grid, 1);
    for (const auto& cell : cells) {
      const std::size_t idx = static_cast<std::size_t>(cell.k1 - 1) * n + (cell.k2 - 1);
      spec.maturities[static_cast<std::size_t>(cell.k1 - 1)] = cell.maturity;
      spec.strikes[idx] = cell.strike;
      surface.iv[idx] = cell.iv;
      surface.noise[idx] = cell.noise;
      surface.mask[idx] = cell.excluded ? 1 : 0;
    }
    ds.surfaces.push_back(std::move(surface));
  }
  ds.hyper.m = ds.surfaces.front().spec.m;
  ds.hyper.n = ds.surfaces.front().spec.n;
  return ds;
}

}  // namespace sabrnet
