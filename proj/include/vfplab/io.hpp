#pragma once

// Persistence: front and checkpoint documents (JSON, exact double round-trip),
// diagnostics CSV, and content hashing for the run manifest.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "vfplab/front.hpp"
#include "vfplab/hydro.hpp"
#include "vfplab/kinetic.hpp"

namespace vfp {

using Json = nlohmann::ordered_json;

Json params_to_json(const ModelParams& p);
ModelParams params_from_json(const Json& j);

Json front_to_json(const FrontProfile& front);
/// Rebuilds the profile from the stored densities; derivatives and the report
/// are recomputed, so they match the saved front bit for bit.
FrontProfile front_from_json(const Json& j);

void save_front(const FrontProfile& front, const std::filesystem::path& path);
FrontProfile load_front(const std::filesystem::path& path);

struct Checkpoint {
  ModelParams params;
  KineticOptions options;
  KineticState state;
};

Json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const Json& j);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_json(const Json& j, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

/// Shortest-round-trip rendering is used by the JSON writer; CSV uses %.17g.
std::string format_double(double x);

inline constexpr const char* kKineticCsvHeader =
    "t,norm_M,norm_D,norm_M_gamma,dnorm_t_M,dnorm_z_M,energy_combined,free_energy,mass_1,mass_2,"
    "null_component,symmetry_error";
inline constexpr const char* kHydroCsvHeader = "t,free_energy,mass_1,mass_2,flux_sup_norm,dist_to_front_sup";

std::string csv_row(const DiagnosticsRecord& r);
std::string csv_row(const HydroRecord& r);

/// Line-buffered CSV file; the header is written on open.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const char* header);
  void write(const std::string& row);

 private:
  struct Closer {
    void operator()(std::FILE* f) const {
      if (f) std::fclose(f);
    }
  };
  std::unique_ptr<std::FILE, Closer> handle_;
};

/// Lowercase hex SHA-256 of the file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace vfp
