#include "vfplab/io.hpp"

#include <openssl/evp.h>

#include <fmt/format.h>
#include <fstream>

#include "vfplab/errors.hpp"

namespace vfp {

namespace {

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(fmt::format("document: missing field '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("document: field '{}' has the wrong type ({})", key, e.what()));
  }
}

void require_format(const Json& j, const char* format) {
  if (field<std::string>(j, "format") != format)
    throw ValidationError(fmt::format("document: expected format '{}'", format));
}

}  // namespace

Json params_to_json(const ModelParams& p) {
  Json j;
  j["beta"] = p.beta;
  j["n"] = p.n;
  j["kernel"] = to_string(p.kernel_kind);
  j["kernel_radius"] = p.kernel_radius;
  j["domain"] = p.half_width;
  j["nz"] = p.nz;
  j["hermite_order"] = p.hermite_order;
  j["dt"] = p.dt;
  return j;
}

ModelParams params_from_json(const Json& j) {
  ModelParams p;
  p.beta = field<double>(j, "beta");
  p.n = field<double>(j, "n");
  p.kernel_kind = kernel_kind_from_string(field<std::string>(j, "kernel"));
  p.kernel_radius = field<double>(j, "kernel_radius");
  p.half_width = field<double>(j, "domain");
  p.nz = field<int>(j, "nz");
  p.hermite_order = field<int>(j, "hermite_order");
  p.dt = field<double>(j, "dt");
  p.validate();
  return p;
}

Json front_to_json(const FrontProfile& front) {
  Json j;
  j["format"] = "vfplab-front";
  j["version"] = 1;
  j["params"] = params_to_json(front.params);
  j["rho_plus"] = front.rho_plus;
  j["rho_minus"] = front.rho_minus;
  j["el_constant"] = front.el_constant;
  const auto& r = front.report;
  j["report"] = {{"el_residual", r.el_residual},     {"elp_residual", r.elp_residual},
                 {"excess_energy", r.excess_energy}, {"tail_rate", r.tail_rate},
                 {"iterations", r.iterations},       {"last_update", r.last_update}};
  j["z"] = front.grid.z;
  j["w1"] = front.w1.values;
  j["w2"] = front.w2.values;
  return j;
}

FrontProfile front_from_json(const Json& j) {
  require_format(j, "vfplab-front");
  const ModelParams params = params_from_json(field<Json>(j, "params"));
  const double rp = field<double>(j, "rho_plus");
  const double rm = field<double>(j, "rho_minus");
  auto w1 = field<std::vector<double>>(j, "w1");
  auto w2 = field<std::vector<double>>(j, "w2");
  const Extension ext = Extension::constant(rm, rp);
  FrontProfile front = make_profile(params, {std::move(w1), ext}, {std::move(w2), ext.mirrored()}, rp, rm);
  if (j.contains("report")) {
    front.report.iterations = field<int>(j["report"], "iterations");
    front.report.last_update = field<double>(j["report"], "last_update");
  }
  return front;
}

void save_front(const FrontProfile& front, const std::filesystem::path& path) {
  write_json(front_to_json(front), path);
}

FrontProfile load_front(const std::filesystem::path& path) { return front_from_json(read_json(path)); }

Json checkpoint_to_json(const Checkpoint& c) {
  Json j;
  j["format"] = "vfplab-checkpoint";
  j["version"] = 1;
  j["params"] = params_to_json(c.params);
  Json o;
  o["order"] = c.options.order;
  o["cfl"] = c.options.cfl;
  o["enforce_symmetry"] = c.options.enforce_symmetry;
  o["gamma"] = c.options.gamma;
  if (c.options.k_const) o["k_const"] = *c.options.k_const;
  j["kinetic"] = o;
  j["time"] = c.state.time;
  j["order"] = c.state.order;
  j["nz"] = c.state.nz;
  j["coeffs"] = c.state.coeffs;
  return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
  require_format(j, "vfplab-checkpoint");
  Checkpoint c;
  c.params = params_from_json(field<Json>(j, "params"));
  const Json o = field<Json>(j, "kinetic");
  c.options.order = field<int>(o, "order");
  c.options.cfl = field<double>(o, "cfl");
  c.options.enforce_symmetry = field<bool>(o, "enforce_symmetry");
  c.options.gamma = field<double>(o, "gamma");
  if (o.contains("k_const")) c.options.k_const = field<double>(o, "k_const");
  c.state = KineticState(field<int>(j, "order"), field<std::size_t>(j, "nz"));
  c.state.time = field<double>(j, "time");
  auto coeffs = field<std::vector<double>>(j, "coeffs");
  if (coeffs.size() != c.state.coeffs.size())
    throw ValidationError(fmt::format("checkpoint: {} coefficients stored, expected {}", coeffs.size(),
                                      c.state.coeffs.size()));
  c.state.coeffs = std::move(coeffs);
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  write_json(checkpoint_to_json(c), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_json(path)); }

void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
  out << j.dump(1) << '\n';
  if (!out) throw ValidationError(fmt::format("write failed for '{}'", path.string()));
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot read '{}'", path.string()));
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

std::string csv_row(const DiagnosticsRecord& r) {
  return fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}",
                     r.time, r.norm_M, r.norm_D, r.norm_M_gamma, r.dnorm_t, r.dnorm_z, r.energy_combined,
                     r.free_energy, r.mass[0], r.mass[1], r.null_component, r.symmetry_error);
}

std::string csv_row(const HydroRecord& r) {
  return fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", r.time, r.free_energy, r.mass[0],
                     r.mass[1], r.flux_sup_norm, r.dist_to_front_sup);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const char* header)
    : handle_(std::fopen(path.string().c_str(), "wb")) {
  if (!handle_) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
  std::fputs(header, handle_.get());
  std::fputc('\n', handle_.get());
}

void CsvWriter::write(const std::string& row) {
  std::fputs(row.c_str(), handle_.get());
  std::fputc('\n', handle_.get());
  std::fflush(handle_.get());
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot read '{}' for hashing", path.string()));
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw NumericalError("sha256: digest initialisation failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

}  // namespace vfp
