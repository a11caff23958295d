#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace nhbraid {

/// The eight knot/link classes realised by the two- and four-band twister models.
enum class LinkClass {
    Unknot,
    Unlink,
    HopfLink,
    HopfChain,
    SolomonKnot,
    HopfLinkPlusUnlink,
    UnknotPlusUnlink,
    DoubleUnlinks,
};

inline constexpr std::array<LinkClass, 8> kAllLinkClasses = {
    LinkClass::Unknot,     LinkClass::Unlink,           LinkClass::HopfLink,          LinkClass::HopfChain,
    LinkClass::SolomonKnot, LinkClass::HopfLinkPlusUnlink, LinkClass::UnknotPlusUnlink, LinkClass::DoubleUnlinks,
};

inline std::string to_string(LinkClass c) {
    switch (c) {
        case LinkClass::Unknot: return "Unknot";
        case LinkClass::Unlink: return "Unlink";
        case LinkClass::HopfLink: return "HopfLink";
        case LinkClass::HopfChain: return "HopfChain";
        case LinkClass::SolomonKnot: return "SolomonKnot";
        case LinkClass::HopfLinkPlusUnlink: return "HopfLinkPlusUnlink";
        case LinkClass::UnknotPlusUnlink: return "UnknotPlusUnlink";
        case LinkClass::DoubleUnlinks: return "DoubleUnlinks";
    }
    return "Unknown";
}

inline std::optional<LinkClass> link_class_from_string(std::string_view s) {
    for (auto c : kAllLinkClasses)
        if (to_string(c) == s) return c;
    return std::nullopt;
}

}  // namespace nhbraid
