#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "helpers.hpp"

using namespace qmle;

namespace {

json garch_doc() {
    return json{{"family", "garch"},
                {"dims", {{"m", 1}, {"p", 1}, {"d", 3}}},
                {"params", {{"c0", 0.1}, {"c", {0.2}}, {"d", {0.5}}}},
                {"innovation", {{"kind", "standard_gaussian"}}}};
}

}  // namespace

TEST_CASE("model document parses and builds") {
    const ModelConfig cfg = model_config_from_json(garch_doc());
    const BuiltModel built = cfg.build();
    CHECK(built.model->family() == "garch");
    CHECK(built.theta.values[1] == doctest::Approx(0.2));
    CHECK(cfg.innov.kind == InnovationSpec::Kind::Gaussian);
}

TEST_CASE("unknown fields are rejected at every level") {
    json top = garch_doc();
    top["extra"] = 1;
    CHECK_THROWS_AS((void)model_config_from_json(top), ContractError);

    json dims = garch_doc();
    dims["dims"]["q"] = 1;
    CHECK_THROWS_AS((void)model_config_from_json(dims), ContractError);

    json params = garch_doc();
    params["params"]["gamma"] = 0.1;
    CHECK_THROWS_AS((void)model_config_from_json(params), ContractError);

    json innov = garch_doc();
    innov["innovation"]["skew"] = 0.5;
    CHECK_THROWS_AS((void)model_config_from_json(innov), ContractError);

    json bounds = garch_doc();
    bounds["bounds"] = {{"lo", {0.0, 0.0, 0.0}}, {"hi", {1.0, 1.0, 1.0}}, {"mid", {0}}};
    CHECK_THROWS_AS((void)model_config_from_json(bounds), ContractError);
}

TEST_CASE("required fields and consistency checks") {
    json missing = garch_doc();
    missing.erase("innovation");
    CHECK_THROWS_AS((void)model_config_from_json(missing), ContractError);

    json baddims = garch_doc();
    baddims["dims"]["d"] = 7;
    CHECK_THROWS_AS((void)model_config_from_json(baddims), ContractError);

    json badfam = garch_doc();
    badfam["family"] = "egarch";
    CHECK_THROWS_AS((void)model_config_from_json(badfam), ContractError);

    json df_on_gaussian = garch_doc();
    df_on_gaussian["innovation"]["df"] = 6.0;
    CHECK_THROWS_AS((void)model_config_from_json(df_on_gaussian), ContractError);

    json badbounds = garch_doc();
    badbounds["bounds"] = {{"lo", {0.0}}, {"hi", {1.0}}};  // wrong length
    CHECK_THROWS_AS((void)model_config_from_json(badbounds), ContractError);
}

TEST_CASE("student-t innovation round trip") {
    json doc = garch_doc();
    doc["innovation"] = {{"kind", "standardized_student_t"}, {"df", 7.0}, {"seed", 99}};
    const ModelConfig cfg = model_config_from_json(doc);
    CHECK(cfg.innov.kind == InnovationSpec::Kind::StudentT);
    CHECK(cfg.innov.nu == 7.0);
    CHECK(cfg.innov.mc_seed == 99);
    const json back = model_config_to_json(cfg);
    CHECK(back["innovation"]["df"] == 7.0);
}

TEST_CASE("bounds override the default box") {
    json doc = garch_doc();
    doc["bounds"] = {{"lo", {0.01, 0.0, 0.0}}, {"hi", {0.5, 0.6, 0.7}}};
    const BuiltModel built = model_config_from_json(doc).build();
    CHECK(built.theta.lo[0] == 0.01);
    CHECK(built.theta.hi[2] == 0.7);
}

TEST_CASE("malformed series files raise contract errors") {
    CHECK_THROWS_AS((void)read_series_csv("/tmp/qmle_missing_file.csv"), ContractError);
    {
        std::ofstream out("/tmp/qmle_bad.qsb", std::ios::binary);
        out << "NOPE";
    }
    CHECK_THROWS_AS((void)read_series_qsb("/tmp/qmle_bad.qsb"), ContractError);
}
