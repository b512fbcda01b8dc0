#include "mvmc/json_io.hpp"

#include <cstdlib>

namespace mvmc {

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const json& j, int expect_dim = -1) {
    if (!j.is_array()) throw ConfigInvalid("expected a JSON array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const auto& x : j) v[i++] = x.get<double>();
    if (expect_dim >= 0 && v.size() != expect_dim)
        throw ConfigInvalid("vector has dimension " +
                            std::to_string(v.size()) + ", expected " +
                            std::to_string(expect_dim));
    return v;
}

json path_map_to_json(const PathRewardMap& m) {
    // Keys sorted so serialization is deterministic.
    std::vector<std::uint64_t> keys;
    keys.reserve(m.size());
    for (const auto& [k, _] : m) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    json obj = json::object();
    for (auto k : keys) obj[std::to_string(k)] = vector_to_json(m.at(k));
    return obj;
}

PathRewardMap path_map_from_json(const json& j, int d) {
    if (!j.is_object()) throw ConfigInvalid("reward map must be a JSON object");
    PathRewardMap m;
    for (const auto& [key, val] : j.items()) {
        char* end = nullptr;
        const std::uint64_t k = std::strtoull(key.c_str(), &end, 10);
        if (end == key.c_str() || *end != '\0')
            throw ConfigInvalid("bad path key '" + key + "'");
        m.emplace(k, vector_from_json(val, d));
    }
    return m;
}

}  // namespace

json depth_to_json(Depth t) {
    if (t.is_inf()) return json("inf");
    return json(t.value());
}

Depth depth_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return Depth::infinite();
        throw ConfigInvalid("depth must be an integer or \"inf\"");
    }
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw ConfigInvalid("depth must be a nonnegative integer or \"inf\"");
    return Depth::finite(j.get<long long>());
}

json norm_index_to_json(double q) {
    if (std::isinf(q)) return json("inf");
    return json(q);
}

double norm_index_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return kInf;
        throw ConfigInvalid("norm index must be a number or \"inf\"");
    }
    return j.get<double>();
}

json instance_to_json(const MrpInstance& inst) {
    json j;
    j["states"] = inst.space.states;
    json rows = json::array();
    for (Eigen::Index r = 0; r < inst.transitions.rows.rows(); ++r)
        rows.push_back(vector_to_json(inst.transitions.rows.row(r)));
    j["transitions"] = rows;
    j["s0"] = inst.s0;
    j["T"] = depth_to_json(inst.T);

    const RewardSpec& rw = inst.rewards;
    json r;
    r["setting"] = to_string(rw.setting);
    r["d"] = rw.d;
    r["r_max"] = rw.r_max;
    r["q"] = norm_index_to_json(rw.q);
    r["gamma"] = rw.gamma;
    switch (rw.setting) {
        case RewardSetting::ExactDepth:
            r["exact"] = path_map_to_json(rw.exact);
            break;
        case RewardSetting::CumulativeDepth: {
            json pd = json::array();
            for (const auto& m : rw.per_depth) pd.push_back(path_map_to_json(m));
            r["per_depth"] = pd;
            break;
        }
        case RewardSetting::PathIndependent: {
            json sr = json::array();
            for (const auto& v : rw.state_rewards) sr.push_back(vector_to_json(v));
            r["state_rewards"] = sr;
            break;
        }
    }
    j["rewards"] = r;
    return j;
}

MrpInstance instance_from_json(const json& j) {
    MrpInstance inst;
    try {
        inst.space.states = j.at("states").get<std::vector<std::string>>();
        const int ns = inst.space.size();
        const json& rows = j.at("transitions");
        if (!rows.is_array() || static_cast<int>(rows.size()) != ns)
            throw ConfigInvalid("transition matrix must have one row per state");
        inst.transitions.rows.resize(ns, ns);
        for (int r = 0; r < ns; ++r)
            inst.transitions.rows.row(r) = vector_from_json(rows[r], ns);
        inst.s0 = j.at("s0").get<int>();
        inst.T = depth_from_json(j.at("T"));

        const json& r = j.at("rewards");
        RewardSpec& rw = inst.rewards;
        rw.setting = reward_setting_from_string(r.at("setting").get<std::string>());
        rw.d = r.at("d").get<int>();
        rw.r_max = r.at("r_max").get<double>();
        rw.q = norm_index_from_json(r.at("q"));
        rw.gamma = r.at("gamma").get<double>();
        switch (rw.setting) {
            case RewardSetting::ExactDepth:
                rw.exact = path_map_from_json(r.at("exact"), rw.d);
                break;
            case RewardSetting::CumulativeDepth:
                for (const auto& m : r.at("per_depth"))
                    rw.per_depth.push_back(path_map_from_json(m, rw.d));
                break;
            case RewardSetting::PathIndependent:
                for (const auto& v : r.at("state_rewards"))
                    rw.state_rewards.push_back(vector_from_json(v, rw.d));
                break;
        }
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("malformed instance JSON: ") + e.what());
    }
    inst.validate();
    return inst;
}

json descriptor_to_json(const HardInstanceDescriptor& desc) {
    json j;
    j["family"] = to_string(desc.family);
    j["bits"] = desc.bits;
    j["d"] = desc.d;
    j["eps"] = desc.eps;
    j["T"] = depth_to_json(desc.T);
    j["gamma"] = desc.gamma;
    j["q"] = norm_index_to_json(desc.q);
    j["r_max"] = desc.r_max;
    j["k"] = desc.k;
    j["t_prime"] = desc.t_prime;
    return j;
}

HardInstanceDescriptor descriptor_from_json(const json& j) {
    HardInstanceDescriptor desc;
    try {
        desc.family = fixture_family_from_string(j.at("family").get<std::string>());
        desc.bits = j.at("bits").get<std::vector<int>>();
        desc.d = j.at("d").get<int>();
        desc.eps = j.at("eps").get<double>();
        desc.T = depth_from_json(j.at("T"));
        desc.gamma = j.at("gamma").get<double>();
        desc.q = norm_index_from_json(j.at("q"));
        desc.r_max = j.at("r_max").get<double>();
        desc.k = j.value("k", 1);
        desc.t_prime = j.value("t_prime", 32);
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("malformed descriptor JSON: ") + e.what());
    }
    for (int b : desc.bits)
        if (b != 0 && b != 1) throw BitsOutsideDomain("descriptor bits must be 0/1");
    return desc;
}

}  // namespace mvmc
