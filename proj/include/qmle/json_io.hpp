#pragma once

#include <string>
#include <variant>

#include <json.hpp>

#include "qmle/innovations.hpp"
#include "qmle/zoo/zoo.hpp"

namespace qmle {

using nlohmann::json;

/// A serializable model description: family tag, coefficient record,
/// optional bound overrides, and the innovation law. build() produces the
/// immutable model; the document round-trips exactly.
struct ModelConfig {
    std::string family;
    std::variant<ArchInfCoeffs, GarchCoeffs, TarchCoeffs, MvArchCoeffs, BekkCoeffs,
                 NlarchCoeffs, NlarCoeffs, ArmaGarchCoeffs>
        coeffs;
    bool has_bounds = false;
    VectorXd lo, hi;
    InnovationSpec innov;

    BuiltModel build() const;
};

/// Parses the document {family, dims, params, bounds?, innovation}, rejecting
/// unknown fields at every level. dims are cross-checked against the family.
ModelConfig model_config_from_json(const json& j);
json model_config_to_json(const ModelConfig& cfg);

ModelConfig load_model_config(const std::string& path);
void save_model_config(const std::string& path, const ModelConfig& cfg);

// --- series files -------------------------------------------------------

/// CSV with header t,x_1,..,x_m; t starts at 1.
void write_series_csv(const std::string& path, const Series& s);
Series read_series_csv(const std::string& path);

/// Compact binary: magic "QSB1", int64 n, int32 m, then n*m little-endian
/// doubles in row-major (time-major) order.
void write_series_qsb(const std::string& path, const Series& s);
Series read_series_qsb(const std::string& path);

/// Dispatches on extension: ".qsb" binary, everything else CSV.
void write_series(const std::string& path, const Series& s);
Series read_series(const std::string& path);

// --- small JSON helpers (shared with the CLI) ----------------------------

/// Throws ContractError if j is not an object or carries a key outside
/// `allowed`; `where` names the offending level in the message.
void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where);

json to_json(const VectorXd& v);
json to_json(const MatrixXd& a);  // row-major nested arrays
VectorXd vector_from_json(const json& j, const std::string& where);
MatrixXd matrix_from_json(const json& j, const std::string& where);

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

}  // namespace qmle
