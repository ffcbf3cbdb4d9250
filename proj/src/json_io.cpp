#include "qmle/json_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "qmle/errors.hpp"

namespace qmle {

namespace {

double number_at(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ContractError(where + ": missing or non-numeric field \"" + key + "\"");
    return j.at(key).get<double>();
}

std::vector<double> number_list(const json& j, const std::string& where) {
    if (!j.is_array()) throw ContractError(where + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ContractError(where + ": non-numeric array entry");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<MatrixXd> matrix_list(const json& j, const std::string& where) {
    if (!j.is_array()) throw ContractError(where + ": expected an array of matrices");
    std::vector<MatrixXd> out;
    for (std::size_t k = 0; k < j.size(); ++k)
        out.push_back(matrix_from_json(j[k], where + "[" + std::to_string(k) + "]"));
    return out;
}

json to_json(const std::vector<MatrixXd>& ms) {
    json arr = json::array();
    for (const auto& a : ms) arr.push_back(qmle::to_json(a));
    return arr;
}

}  // namespace

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    if (!j.is_object()) throw ContractError(where + ": expected a JSON object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                ok = true;
                break;
            }
        if (!ok) throw ContractError(where + ": unknown field \"" + item.key() + "\"");
    }
}

json to_json(const VectorXd& v) {
    json arr = json::array();
    for (long i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json to_json(const MatrixXd& a) {
    json rows = json::array();
    for (long i = 0; i < a.rows(); ++i) {
        json row = json::array();
        for (long j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
        rows.push_back(row);
    }
    return rows;
}

VectorXd vector_from_json(const json& j, const std::string& where) {
    const auto v = number_list(j, where);
    return Eigen::Map<const VectorXd>(v.data(), static_cast<long>(v.size()));
}

MatrixXd matrix_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        throw ContractError(where + ": expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw ContractError(where + ": expected nested arrays of numbers");
    MatrixXd out(static_cast<long>(j.size()), static_cast<long>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto row = number_list(j[i], where + " row " + std::to_string(i));
        if (row.size() != cols) throw ContractError(where + ": ragged rows");
        for (std::size_t k = 0; k < cols; ++k)
            out(static_cast<long>(i), static_cast<long>(k)) = row[k];
    }
    return out;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& ex) {
        throw ContractError(path + ": " + ex.what());
    }
    return j;
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

// --- model documents ------------------------------------------------------

namespace {

ArchInfCoeffs arch_inf_params(const json& p) {
    ArchInfCoeffs c;
    c.b0 = number_at(p, "b0", "params");
    if (p.contains("b")) {
        reject_unknown(p, {"b0", "b"}, "params");
        c.b = number_list(p.at("b"), "params.b");
        c.decay = DecayTag::finite(static_cast<int>(c.b.size()));
    } else {
        reject_unknown(p, {"b0", "scale", "ell"}, "params");
        c.power_law = true;
        c.scale = number_at(p, "scale", "params");
        c.ell = number_at(p, "ell", "params");
        c.decay = DecayTag::polynomial(c.ell);
    }
    return c;
}

json arch_inf_json(const ArchInfCoeffs& c) {
    json p{{"b0", c.b0}};
    if (c.power_law) {
        p["scale"] = c.scale;
        p["ell"] = c.ell;
    } else {
        p["b"] = c.b;
    }
    return p;
}

GarchCoeffs garch_params(const json& p) {
    reject_unknown(p, {"c0", "c", "d"}, "params");
    GarchCoeffs c;
    c.c0 = number_at(p, "c0", "params");
    c.c = number_list(p.at("c"), "params.c");
    c.d = number_list(p.at("d"), "params.d");
    return c;
}

TarchCoeffs tarch_params(const json& p) {
    reject_unknown(p, {"b0", "b_plus", "b_minus"}, "params");
    TarchCoeffs c;
    c.b0 = number_at(p, "b0", "params");
    c.b_plus = number_list(p.at("b_plus"), "params.b_plus");
    c.b_minus = number_list(p.at("b_minus"), "params.b_minus");
    return c;
}

MvArchCoeffs mvarch_params(const json& p) {
    reject_unknown(p, {"B0", "B"}, "params");
    MvArchCoeffs c;
    c.B0 = matrix_from_json(p.at("B0"), "params.B0");
    c.B = matrix_list(p.at("B"), "params.B");
    return c;
}

BekkCoeffs bekk_params(const json& p) {
    reject_unknown(p, {"C0", "C", "D"}, "params");
    BekkCoeffs c;
    c.C0 = matrix_from_json(p.at("C0"), "params.C0");
    c.C = matrix_list(p.at("C"), "params.C");
    c.D = matrix_list(p.at("D"), "params.D");
    return c;
}

NlarchCoeffs nlarch_params(const json& p) {
    reject_unknown(p, {"B0", "B_plus", "B_minus"}, "params");
    NlarchCoeffs c;
    c.B0 = vector_from_json(p.at("B0"), "params.B0");
    c.B_plus = matrix_list(p.at("B_plus"), "params.B_plus");
    c.B_minus = matrix_list(p.at("B_minus"), "params.B_minus");
    return c;
}

NlarCoeffs nlar_params(const json& p) {
    reject_unknown(p, {"a0", "A"}, "params");
    NlarCoeffs c;
    c.a0 = vector_from_json(p.at("a0"), "params.a0");
    c.A = matrix_list(p.at("A"), "params.A");
    return c;
}

ArmaGarchCoeffs arma_garch_params(const json& p) {
    reject_unknown(p, {"Phi", "Psi", "c0", "C", "D"}, "params");
    ArmaGarchCoeffs c;
    c.Phi = matrix_list(p.at("Phi"), "params.Phi");
    c.Psi = matrix_list(p.at("Psi"), "params.Psi");
    c.c0 = vector_from_json(p.at("c0"), "params.c0");
    c.C = matrix_list(p.at("C"), "params.C");
    c.D = matrix_list(p.at("D"), "params.D");
    return c;
}

InnovationSpec innovation_from_json(const json& j) {
    reject_unknown(j, {"kind", "df", "seed"}, "innovation");
    if (!j.contains("kind") || !j.at("kind").is_string())
        throw ContractError("innovation: missing field \"kind\"");
    InnovationSpec spec;
    spec.kind = InnovationSpec::kind_from_name(j.at("kind").get<std::string>());
    if (spec.kind == InnovationSpec::Kind::StudentT) {
        spec = InnovationSpec::student_t(number_at(j, "df", "innovation"));
    } else if (j.contains("df")) {
        throw ContractError("innovation: \"df\" is only valid for the Student-t kind");
    }
    if (j.contains("seed")) {
        const auto& s = j.at("seed");
        if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<long long>() < 0))
            throw ContractError("innovation: \"seed\" must be a nonnegative integer");
        spec.mc_seed = s.get<std::uint64_t>();
    }
    return spec;
}

json innovation_to_json(const InnovationSpec& spec) {
    json j{{"kind", spec.kind_name()}};
    if (spec.kind == InnovationSpec::Kind::StudentT) j["df"] = spec.nu;
    j["seed"] = spec.mc_seed;
    return j;
}

}  // namespace

BuiltModel ModelConfig::build() const {
    BuiltModel built = std::visit(
        [](const auto& c) -> BuiltModel {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ArchInfCoeffs>) return make_arch_inf(c);
            else if constexpr (std::is_same_v<T, GarchCoeffs>) return make_garch(c);
            else if constexpr (std::is_same_v<T, TarchCoeffs>) return make_tarch(c);
            else if constexpr (std::is_same_v<T, MvArchCoeffs>) return make_mvarch(c);
            else if constexpr (std::is_same_v<T, BekkCoeffs>) return make_bekk(c);
            else if constexpr (std::is_same_v<T, NlarchCoeffs>) return make_nlarch(c);
            else if constexpr (std::is_same_v<T, NlarCoeffs>) return make_nlar(c);
            else return make_arma_garch(c);
        },
        coeffs);
    if (has_bounds) {
        if (lo.size() != built.theta.values.size() || hi.size() != lo.size())
            throw ContractError("bounds: lo/hi dimension != parameter dimension " +
                                std::to_string(built.theta.values.size()));
        built.theta.lo = lo;
        built.theta.hi = hi;
        built.theta.validate();
    }
    return built;
}

ModelConfig model_config_from_json(const json& j) {
    reject_unknown(j, {"family", "dims", "params", "bounds", "innovation"}, "model");
    for (const char* key : {"family", "dims", "params", "innovation"})
        if (!j.contains(key))
            throw ContractError(std::string("model: missing field \"") + key + "\"");
    ModelConfig cfg;
    cfg.family = j.at("family").get<std::string>();

    const json& p = j.at("params");
    if (cfg.family == "arch_inf") cfg.coeffs = arch_inf_params(p);
    else if (cfg.family == "garch") cfg.coeffs = garch_params(p);
    else if (cfg.family == "tarch") cfg.coeffs = tarch_params(p);
    else if (cfg.family == "mvarch") cfg.coeffs = mvarch_params(p);
    else if (cfg.family == "bekk") cfg.coeffs = bekk_params(p);
    else if (cfg.family == "nlarch") cfg.coeffs = nlarch_params(p);
    else if (cfg.family == "nlar") cfg.coeffs = nlar_params(p);
    else if (cfg.family == "arma_garch") cfg.coeffs = arma_garch_params(p);
    else throw ContractError("model: unknown family \"" + cfg.family + "\"");

    cfg.innov = innovation_from_json(j.at("innovation"));

    if (j.contains("bounds")) {
        const json& b = j.at("bounds");
        reject_unknown(b, {"lo", "hi"}, "bounds");
        if (!b.contains("lo") || !b.contains("hi"))
            throw ContractError("bounds: both \"lo\" and \"hi\" are required");
        cfg.has_bounds = true;
        cfg.lo = vector_from_json(b.at("lo"), "bounds.lo");
        cfg.hi = vector_from_json(b.at("hi"), "bounds.hi");
    }

    // dims are derivable from the params; the document carries them for
    // readers, so inconsistency is an error rather than silently ignored.
    const BuiltModel built = cfg.build();
    const json& dims = j.at("dims");
    reject_unknown(dims, {"m", "p", "d"}, "dims");
    for (const char* key : {"m", "p", "d"}) {
        const int got = static_cast<int>(number_at(dims, key, "dims"));
        const int want = key[0] == 'm'   ? built.model->obs_dim()
                         : key[0] == 'p' ? built.model->innov_dim()
                                         : built.model->param_dim();
        if (got != want)
            throw ContractError(std::string("dims: field \"") + key + "\" is " +
                                std::to_string(got) + " but the params imply " +
                                std::to_string(want));
    }
    return cfg;
}

json model_config_to_json(const ModelConfig& cfg) {
    const BuiltModel built = cfg.build();
    json j;
    j["family"] = cfg.family;
    j["dims"] = {{"m", built.model->obs_dim()}, {"p", built.model->innov_dim()}, {"d", built.model->param_dim()}};
    j["params"] = std::visit(
        [](const auto& c) -> json {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ArchInfCoeffs>) return arch_inf_json(c);
            else if constexpr (std::is_same_v<T, GarchCoeffs>)
                return json{{"c0", c.c0}, {"c", c.c}, {"d", c.d}};
            else if constexpr (std::is_same_v<T, TarchCoeffs>)
                return json{{"b0", c.b0}, {"b_plus", c.b_plus}, {"b_minus", c.b_minus}};
            else if constexpr (std::is_same_v<T, MvArchCoeffs>)
                return json{{"B0", to_json(c.B0)}, {"B", to_json(c.B)}};
            else if constexpr (std::is_same_v<T, BekkCoeffs>)
                return json{{"C0", to_json(c.C0)}, {"C", to_json(c.C)},
                            {"D", to_json(c.D)}};
            else if constexpr (std::is_same_v<T, NlarchCoeffs>)
                return json{{"B0", to_json(c.B0)}, {"B_plus", to_json(c.B_plus)},
                            {"B_minus", to_json(c.B_minus)}};
            else if constexpr (std::is_same_v<T, NlarCoeffs>)
                return json{{"a0", to_json(c.a0)}, {"A", to_json(c.A)}};
            else
                return json{{"Phi", to_json(c.Phi)}, {"Psi", to_json(c.Psi)},
                            {"c0", to_json(c.c0)}, {"C", to_json(c.C)},
                            {"D", to_json(c.D)}};
        },
        cfg.coeffs);
    if (cfg.has_bounds) j["bounds"] = {{"lo", to_json(cfg.lo)}, {"hi", to_json(cfg.hi)}};
    j["innovation"] = innovation_to_json(cfg.innov);
    return j;
}

ModelConfig load_model_config(const std::string& path) {
    return model_config_from_json(load_json_file(path));
}

void save_model_config(const std::string& path, const ModelConfig& cfg) {
    save_json_file(path, model_config_to_json(cfg));
}

// --- series files ---------------------------------------------------------

void write_series_csv(const std::string& path, const Series& s) {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot open " + path + " for writing");
    const long m = s.data.cols();
    out << "t";
    for (long j = 0; j < m; ++j) out << ",x_" << (j + 1);
    out << '\n';
    out.precision(17);
    for (long t = 0; t < s.data.rows(); ++t) {
        out << (t + 1);
        for (long j = 0; j < m; ++j) out << ',' << s.data(t, j);
        out << '\n';
    }
}

Series read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ContractError(path + ": empty file");
    long m = -1;  // columns after "t" in the header
    {
        std::stringstream hs(line);
        std::string cell;
        long count = 0;
        while (std::getline(hs, cell, ',')) ++count;
        if (count < 2) throw ContractError(path + ": header must be t,x_1..x_m");
        m = count - 1;
    }
    std::vector<double> flat;
    long n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');  // the index column
        long got = 0;
        while (std::getline(ls, cell, ',')) {
            flat.push_back(std::stod(cell));
            ++got;
        }
        if (got != m)
            throw ContractError(path + ": row " + std::to_string(n + 1) + " has " +
                                std::to_string(got) + " values, expected " +
                                std::to_string(m));
        ++n;
    }
    Series s;
    s.data = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                            Eigen::RowMajor>>(flat.data(), n, m);
    return s;
}

namespace {
constexpr char kQsbMagic[4] = {'Q', 'S', 'B', '1'};
}

void write_series_qsb(const std::string& path, const Series& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ContractError("cannot open " + path + " for writing");
    const std::int64_t n = s.data.rows();
    const std::int32_t m = static_cast<std::int32_t>(s.data.cols());
    out.write(kQsbMagic, 4);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&m), sizeof m);
    for (long t = 0; t < n; ++t)
        for (long j = 0; j < m; ++j) {
            const double v = s.data(t, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
}

Series read_series_qsb(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractError("cannot open " + path);
    char magic[4];
    std::int64_t n = 0;
    std::int32_t m = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&m), sizeof m);
    if (!in || std::memcmp(magic, kQsbMagic, 4) != 0)
        throw ContractError(path + ": not a QSB1 series file");
    if (n < 0 || m < 1) throw ContractError(path + ": corrupt QSB1 header");
    Series s;
    s.data.resize(n, m);
    for (long t = 0; t < n; ++t)
        for (long j = 0; j < m; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof v);
            if (!in) throw ContractError(path + ": truncated QSB1 payload");
            s.data(t, j) = v;
        }
    return s;
}

namespace {
bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}
}  // namespace

void write_series(const std::string& path, const Series& s) {
    if (has_suffix(path, ".qsb")) write_series_qsb(path, s);
    else write_series_csv(path, s);
}

Series read_series(const std::string& path) {
    return has_suffix(path, ".qsb") ? read_series_qsb(path) : read_series_csv(path);
}

}  // namespace qmle
