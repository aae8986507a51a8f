#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <string>

namespace kgqa {

// Entity and relation identifiers are opaque tokens with disjoint
// namespaces: the same token may not name both an entity and a relation.
// Strong types keep the two from being swapped in call sites.

struct EntityId {
    std::string value;

    EntityId() = default;
    explicit EntityId(std::string v) : value(std::move(v)) {}

    auto operator<=>(const EntityId&) const = default;
};

struct RelationId {
    std::string value;

    RelationId() = default;
    explicit RelationId(std::string v) : value(std::move(v)) {}

    auto operator<=>(const RelationId&) const = default;
};

} // namespace kgqa

template <>
struct std::hash<kgqa::EntityId> {
    std::size_t operator()(const kgqa::EntityId& id) const noexcept {
        return std::hash<std::string>{}(id.value);
    }
};

template <>
struct std::hash<kgqa::RelationId> {
    std::size_t operator()(const kgqa::RelationId& id) const noexcept {
        return std::hash<std::string>{}(id.value);
    }
};
