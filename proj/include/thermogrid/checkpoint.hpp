#pragma once

// Agent checkpoint directory: six network files in the Mlp text format plus
// manifest.json (format version, master seed, episodes, config echo).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "thermogrid/config.hpp"
#include "thermogrid/mlp.hpp"
#include "thermogrid/td3.hpp"

namespace thermogrid {

inline constexpr int kAgentCheckpointVersion = 1;

struct CheckpointManifest {
    std::uint64_t master_seed = 0;
    std::size_t episodes = 0;
    SystemConfig config;
};

struct LoadedCheckpoint {
    CheckpointManifest manifest;
    Td3Agent agent;
};

namespace detail {

inline constexpr const char* kNetworkFiles[] = {"actor.mlp",        "critic1.mlp",
                                                "critic2.mlp",      "actor_target.mlp",
                                                "critic1_target.mlp", "critic2_target.mlp"};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

inline Mlp read_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputMismatch("agent checkpoint: missing " + path.string());
    return load_mlp(in);
}

}  // namespace detail

inline void save_agent_checkpoint(const std::filesystem::path& dir, const Td3Agent& agent,
                                  const CheckpointManifest& manifest) {
    std::filesystem::create_directories(dir);
    const Mlp* nets[] = {&agent.actor(),        &agent.critic1(),        &agent.critic2(),
                         &agent.actor_target(), &agent.critic1_target(), &agent.critic2_target()};
    for (std::size_t i = 0; i < 6; ++i) {
        detail::write_text(dir / detail::kNetworkFiles[i], to_checkpoint_string(*nets[i]));
    }
    nlohmann::ordered_json j;
    j["format_version"] = kAgentCheckpointVersion;
    j["master_seed"] = manifest.master_seed;
    j["episodes"] = manifest.episodes;
    j["networks"] = detail::kNetworkFiles;
    j["config"] = config_to_json(manifest.config);
    detail::write_text(dir / "manifest.json", j.dump(2) + "\n");
}

inline LoadedCheckpoint load_agent_checkpoint(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw InputMismatch("agent checkpoint: no manifest.json in " + dir.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputMismatch(std::string("agent checkpoint manifest: ") + e.what());
    }
    if (!j.contains("format_version") || j["format_version"] != kAgentCheckpointVersion) {
        throw InputMismatch("agent checkpoint: unsupported format version");
    }
    CheckpointManifest m;
    try {
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.episodes = j.at("episodes").get<std::size_t>();
        m.config = config_from_json(j.at("config"));
    } catch (const nlohmann::json::exception& e) {
        throw InputMismatch(std::string("agent checkpoint manifest: ") + e.what());
    }
    Mlp nets[6];
    for (std::size_t i = 0; i < 6; ++i) nets[i] = detail::read_network(dir / detail::kNetworkFiles[i]);
    return {m, Td3Agent(m.config.td3, std::move(nets[0]), std::move(nets[1]), std::move(nets[2]),
                        std::move(nets[3]), std::move(nets[4]), std::move(nets[5]))};
}

}  // namespace thermogrid
