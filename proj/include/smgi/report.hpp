#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace smgi {

using Json = nlohmann::ordered_json;

enum class Obligation {
    closure,
    stability,
    capacity,
    evaluative_invariance,
    bundle,
    theorem_structural_closure,
};

enum class CheckMode {
    exhaustive, // every reachable case enumerated: the verdict is a proof
    sampled,    // probed at sampled points: the verdict is evidence only
};

inline const char* to_string(Obligation o) {
    switch (o) {
        case Obligation::closure: return "closure";
        case Obligation::stability: return "stability";
        case Obligation::capacity: return "capacity";
        case Obligation::evaluative_invariance: return "evaluative_invariance";
        case Obligation::bundle: return "bundle";
        case Obligation::theorem_structural_closure: return "theorem_structural_closure";
    }
    return "unknown";
}

inline const char* to_string(CheckMode m) {
    return m == CheckMode::exhaustive ? "exhaustive" : "sampled";
}

// Verdict plus numeric evidence for one obligation (or a nested bundle).
// Sampled reports must carry sample counts and confidence radii in
// `evidence`; checker implementations enforce that.
struct CertificateReport {
    Obligation obligation = Obligation::closure;
    std::string name;
    bool pass = false;
    CheckMode mode = CheckMode::exhaustive;
    std::map<std::string, double> evidence;
    std::vector<std::string> witnesses;
    std::vector<CertificateReport> sub_reports;

    const CertificateReport* find(const std::string& sub_name) const {
        for (const auto& r : sub_reports)
            if (r.name == sub_name) return &r;
        return nullptr;
    }

    Json to_json() const {
        Json j;
        j["obligation"] = to_string(obligation);
        j["name"] = name;
        j["pass"] = pass;
        j["mode"] = to_string(mode);
        Json ev = Json::object();
        for (const auto& [k, v] : evidence) ev[k] = v;
        j["evidence"] = ev;
        j["witnesses"] = witnesses;
        if (!sub_reports.empty()) {
            Json subs = Json::array();
            for (const auto& r : sub_reports) subs.push_back(r.to_json());
            j["sub_reports"] = subs;
        }
        return j;
    }
};

} // namespace smgi
