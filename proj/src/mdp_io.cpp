#include "optpac/mdp_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "optpac/errors.hpp"

namespace optpac {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "optpac-mdp";
constexpr int kVersion = 1;

std::string where(const char* field, int h, int s, int a = -1) {
    std::ostringstream os;
    os << field << "[h=" << h << "][s=" << s << "]";
    if (a >= 0) os << "[a=" << a << "]";
    return os.str();
}

int get_int(const json& doc, const char* key) {
    if (!doc.contains(key)) throw ModelError(std::string("missing field '") + key + "'");
    const json& v = doc.at(key);
    if (!v.is_number_integer()) throw ModelError(std::string("field '") + key + "' must be an integer");
    return v.get<int>();
}

const json& stage_array(const json& doc, const char* key, int H, int S) {
    const json& arr = doc.at(key);
    if (!arr.is_array() || static_cast<int>(arr.size()) != H)
        throw ModelError(std::string("'") + key + "' must be an array of H=" + std::to_string(H) + " stages");
    for (int h = 0; h < H; ++h)
        if (!arr[h].is_array() || static_cast<int>(arr[h].size()) != S)
            throw ModelError(std::string("'") + key + "'[h=" + std::to_string(h + 1) +
                             "] must list S=" + std::to_string(S) + " states");
    return arr;
}

RewardModel parse_reward(const json& r, int h, int s, int a) {
    if (!r.is_object() || !r.contains("kind") || !r.contains("mean"))
        throw ModelError(where("rewards", h, s, a) + " must be an object with 'kind' and 'mean'");
    const std::string kind = r.at("kind").get<std::string>();
    const double mean = r.at("mean").get<double>();
    if (kind == "bernoulli") return RewardModel::bernoulli(mean);
    if (kind == "fixed") return RewardModel::fixed(mean);
    if (kind == "gaussian") {
        if (!r.contains("variance"))
            throw ModelError(where("rewards", h, s, a) + " gaussian reward needs 'variance'");
        return RewardModel::gaussian(mean, r.at("variance").get<double>());
    }
    throw ModelError(where("rewards", h, s, a) + " unknown reward kind '" + kind + "'");
}

json reward_to_json(const RewardModel& r) {
    switch (r.kind) {
        case RewardKind::Bernoulli: return {{"kind", "bernoulli"}, {"mean", r.mean}};
        case RewardKind::Fixed: return {{"kind", "fixed"}, {"mean", r.mean}};
        case RewardKind::Gaussian:
            return {{"kind", "gaussian"}, {"mean", r.mean}, {"variance", r.variance}};
    }
    return nullptr;
}

Mdp from_json(const json& doc) {
    if (!doc.is_object()) throw ModelError("MDP document must be a JSON object");
    if (doc.contains("format") && doc.at("format") != kFormat)
        throw ModelError("unexpected format tag " + doc.at("format").dump());
    if (doc.contains("version") && doc.at("version") != kVersion)
        throw ModelError("unsupported MDP file version " + doc.at("version").dump());

    const int S = get_int(doc, "S");
    const int A = get_int(doc, "A");
    const int H = get_int(doc, "H");
    const int s1 = doc.contains("s1") ? get_int(doc, "s1") : 0;
    MdpBuilder b(S, A, H, s1);

    if (doc.contains("masks")) {
        const json& masks = stage_array(doc, "masks", H, S);
        for (int h = 1; h <= H; ++h)
            for (int s = 0; s < S; ++s) {
                const json& m = masks[h - 1][s];
                if (!m.is_array()) throw ModelError(where("masks", h, s) + " must be a list of actions");
                std::vector<int> acts;
                for (const json& a : m) {
                    if (!a.is_number_integer() || a.get<int>() < 0 || a.get<int>() >= A)
                        throw ModelError(where("masks", h, s) + " contains invalid action " + a.dump());
                    acts.push_back(a.get<int>());
                }
                b.set_actions(h, s, acts);
            }
    }

    if (!doc.contains("transitions")) throw ModelError("missing field 'transitions'");
    if (!doc.contains("rewards")) throw ModelError("missing field 'rewards'");
    const json& trans = stage_array(doc, "transitions", H, S);
    const json& rew = stage_array(doc, "rewards", H, S);

    std::vector<double> row(S);
    for (int h = 1; h <= H; ++h) {
        for (int s = 0; s < S; ++s) {
            const json& ta = trans[h - 1][s];
            const json& ra = rew[h - 1][s];
            if (!ta.is_array() || static_cast<int>(ta.size()) != A)
                throw ModelError(where("transitions", h, s) + " must list A=" + std::to_string(A) + " actions");
            if (!ra.is_array() || static_cast<int>(ra.size()) != A)
                throw ModelError(where("rewards", h, s) + " must list A=" + std::to_string(A) + " actions");
            for (int a = 0; a < A; ++a) {
                if (!b.available(h, s, a)) continue;
                const json& t = ta[a];
                if (!t.is_array() || static_cast<int>(t.size()) != S)
                    throw ModelError(where("transitions", h, s, a) + " must be a list of S=" +
                                     std::to_string(S) + " probabilities");
                for (int sp = 0; sp < S; ++sp) {
                    if (!t[sp].is_number())
                        throw ModelError(where("transitions", h, s, a) + " entry " + std::to_string(sp) +
                                         " is not a number");
                    row[sp] = t[sp].get<double>();
                }
                b.set_transition(h, s, a, row);
                b.set_reward(h, s, a, parse_reward(ra[a], h, s, a));
            }
        }
    }
    return b.build();
}

json to_json(const Mdp& mdp) {
    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    json masks = json::array(), trans = json::array(), rew = json::array();
    for (int h = 1; h <= H; ++h) {
        json mh = json::array(), th = json::array(), rh = json::array();
        for (int s = 0; s < S; ++s) {
            json ms = json::array(), ts = json::array(), rs = json::array();
            for (int a = 0; a < A; ++a) {
                if (!mdp.available(h, s, a)) {
                    ts.push_back(nullptr);
                    rs.push_back(nullptr);
                    continue;
                }
                ms.push_back(a);
                const auto p = mdp.transition(h, s, a);
                ts.push_back(json(std::vector<double>(p.begin(), p.end())));
                rs.push_back(reward_to_json(mdp.reward(h, s, a)));
            }
            mh.push_back(std::move(ms));
            th.push_back(std::move(ts));
            rh.push_back(std::move(rs));
        }
        masks.push_back(std::move(mh));
        trans.push_back(std::move(th));
        rew.push_back(std::move(rh));
    }
    json doc;
    doc["format"] = kFormat;
    doc["version"] = kVersion;
    doc["S"] = S;
    doc["A"] = A;
    doc["H"] = H;
    doc["s1"] = mdp.initial_state();
    doc["masks"] = std::move(masks);
    doc["transitions"] = std::move(trans);
    doc["rewards"] = std::move(rew);
    return doc;
}

}  // namespace

Mdp parse_mdp(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed MDP file: ") + e.what());
    }
    try {
        return from_json(doc);
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed MDP file: ") + e.what());
    }
}

Mdp load_mdp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open MDP file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_mdp(ss.str());
}

std::string serialize_mdp(const Mdp& mdp) { return to_json(mdp).dump(1) + "\n"; }

void save_mdp(const Mdp& mdp, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot write MDP file " + path.string());
    out << serialize_mdp(mdp);
}

}  // namespace optpac
