#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "thermogrid/config.hpp"

using namespace thermogrid;
using nlohmann::json;

#ifndef THERMOGRID_SOURCE_DIR
#error "THERMOGRID_SOURCE_DIR must point at the repository root"
#endif

namespace {

json defaults_json() { return json::parse(config_to_json(SystemConfig::defaults()).dump()); }

std::string error_of(const json& j) {
    try {
        config_from_json(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, DefaultsReproduceParameterTable) {
    const auto c = SystemConfig::defaults();
    EXPECT_EQ(c.reward.k1, 0.1);
    EXPECT_EQ(c.reward.k2, 0.055);
    EXPECT_EQ(c.reward.k3, 0.1);
    EXPECT_EQ(c.reward.l1, 1.1);
    EXPECT_EQ(c.reward.l2, 1.0);
    EXPECT_EQ(c.reward.l3, 1.2);
    EXPECT_EQ(c.reward.l4, 1.0);
    EXPECT_EQ(c.reward.l5, 1.5);
    EXPECT_EQ(c.td3, Td3Config{});
    EXPECT_EQ(c.plant.horizon, 24u);
    EXPECT_NO_THROW(validate(c));
}

TEST(Config, BundledFileMatchesDefaults) {
    const auto path = std::filesystem::path(THERMOGRID_SOURCE_DIR) / "configs" / "default.json";
    const auto c = load_config(path);
    EXPECT_EQ(config_to_json(c), config_to_json(SystemConfig::defaults()));
    EXPECT_EQ(c.profile, SystemConfig::defaults().profile);
}

TEST(Config, JsonRoundTrip) {
    auto c = SystemConfig::defaults();
    c.reward.l5 = 0.0;
    c.td3.hidden_layers = {32, 16, 8};
    c.plant.water_tank.hsd_init_kwh = 1234.5;
    const auto back = config_from_json(json::parse(config_to_json(c).dump()));
    EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, PartialFileKeepsDefaults) {
    const auto c = config_from_json(json{{"schema_version", 1}, {"reward", {{"l5", 0.0}}}});
    EXPECT_EQ(c.reward.l5, 0.0);
    EXPECT_EQ(c.reward.k1, 0.1);
    EXPECT_EQ(c.td3.episodes, 200u);
}

TEST(Config, UnknownKeysNamePath) {
    auto j = defaults_json();
    j["plant"]["water_tank"]["volume"] = 3;
    EXPECT_EQ(error_of(j), "plant.water_tank.volume: unknown key");
    j = defaults_json();
    j["extra"] = 1;
    EXPECT_EQ(error_of(j), "extra: unknown key");
}

TEST(Config, SchemaVersion) {
    auto j = defaults_json();
    j.erase("schema_version");
    EXPECT_EQ(error_of(j), "schema_version: missing");
    j["schema_version"] = 2;
    EXPECT_NE(error_of(j).find("schema_version"), std::string::npos);
}

TEST(Config, TypeAndRangeErrorsNamePath) {
    auto j = defaults_json();
    j["td3"]["gamma"] = "high";
    EXPECT_EQ(error_of(j), "td3.gamma: expected a number");
    j = defaults_json();
    j["td3"]["gamma"] = 1.5;
    EXPECT_NE(error_of(j).find("td3.gamma"), std::string::npos);
    j = defaults_json();
    j["plant"]["heat_pump_low"]["cop"] = 0.5;
    EXPECT_NE(error_of(j).find("plant.heat_pump_low.cop"), std::string::npos);
    j = defaults_json();
    j["profile"]["heat_load_kw"].erase(0);
    EXPECT_NE(error_of(j).find("profile.heat_load_kw"), std::string::npos);
    j = defaults_json();
    j["td3"]["batch_size"] = -4;
    EXPECT_NE(error_of(j).find("td3.batch_size"), std::string::npos);
    j = defaults_json();
    j["training"]["tier_hi"] = 0.5;
    EXPECT_NE(error_of(j).find("training.tier"), std::string::npos);
}

TEST(Config, SellPricesFollowRatio) {
    auto j = defaults_json();
    j["sell_price_ratio"] = 0.5;
    const auto c = config_from_json(j);
    for (std::size_t t = 0; t < 24; ++t) {
        EXPECT_EQ(c.profile.sell_price_per_kwh[t], 0.5 * c.profile.buy_price_per_kwh[t]);
    }
}

TEST(Config, MissingFileNamesPath) {
    try {
        load_config("/nonexistent/thermogrid.json");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/thermogrid.json"), std::string::npos);
    }
}

TEST(Config, MalformedJson) {
    const auto path = std::filesystem::temp_directory_path() / "thermogrid_bad.json";
    std::ofstream(path) << "{ \"schema_version\": 1, ";
    EXPECT_THROW(load_config(path), ConfigError);
    std::filesystem::remove(path);
}
