#include "mvmae/data/study.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace mvmae::data {

ProjectionFamily family_from_token(std::string_view token) {
    std::string t(token);
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (t == "PA" || t == "AP" || t == "FRONTAL" || t == "F") return ProjectionFamily::frontal;
    if (t == "LL" || t == "LATERAL" || t == "LAT" || t == "L") return ProjectionFamily::lateral;
    return ProjectionFamily::unknown;
}

std::string_view family_name(ProjectionFamily family) {
    switch (family) {
        case ProjectionFamily::frontal:
            return "frontal";
        case ProjectionFamily::lateral:
            return "lateral";
        case ProjectionFamily::unknown:
            break;
    }
    return "unknown";
}

}  // namespace mvmae::data
