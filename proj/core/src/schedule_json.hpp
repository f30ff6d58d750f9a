#pragma once

#include <json.hpp>

#include "gsdnet/sde.hpp"

namespace gsdnet {

inline nlohmann::json schedule_to_json(const sde::DiffusionSchedule& s) {
    nlohmann::json j;
    if (s.kind() == sde::ScheduleKind::VariancePreserving) {
        j["kind"] = "vp";
        j["beta_min"] = s.beta_min();
        j["beta_max"] = s.beta_max();
    } else {
        j["kind"] = "ve";
        j["sigma_min"] = s.sigma_min();
        j["sigma_max"] = s.sigma_max();
    }
    return j;
}

inline sde::DiffusionSchedule schedule_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "vp")
        return sde::DiffusionSchedule::vp(j.at("beta_min").get<double>(),
                                          j.at("beta_max").get<double>());
    if (kind == "ve")
        return sde::DiffusionSchedule::ve(j.at("sigma_min").get<double>(),
                                          j.at("sigma_max").get<double>());
    throw std::invalid_argument("schedule_from_json: unknown kind '" + kind + "'");
}

}  // namespace gsdnet
