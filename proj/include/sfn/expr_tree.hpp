#pragma once

// Symbolic function network: a tree of parameterized elementary functions.
//
// Each link applies one of three functions to the sum of its baseline input
// variable and the outputs of its children:
//
//   E1(z) = w * (z^2 + 1)^v
//   E2(z) = q * exp(alpha * z)
//   E3(z) = p * log(z^2 + 1)
//
// The model output is the plain sum of the root links (no bias term).

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sfn {

enum class FunctionKind : std::uint8_t { E1, E2, E3 };

inline constexpr std::array<FunctionKind, 3> kAllKinds{FunctionKind::E1, FunctionKind::E2, FunctionKind::E3};

std::string_view to_string(FunctionKind kind);
FunctionKind parse_kind(std::string_view text);

// E1 and E2 carry a shape weight (v, alpha); E3 has only the multiplier p.
constexpr bool has_shape(FunctionKind kind) { return kind != FunctionKind::E3; }
constexpr std::size_t weight_count(FunctionKind kind) { return has_shape(kind) ? 2 : 1; }

struct LinkWeights {
    double multiplier = 0.0;          // w, q or p
    std::optional<double> shape;      // v or alpha

    static LinkWeights e1(double w, double v) { return {w, v}; }
    static LinkWeights e2(double q, double alpha) { return {q, alpha}; }
    static LinkWeights e3(double p) { return {p, std::nullopt}; }

    friend bool operator==(const LinkWeights&, const LinkWeights&) = default;
};

struct LinkId {
    std::uint64_t value = 0;
    friend auto operator<=>(const LinkId&, const LinkId&) = default;
};

struct FunctionLink {
    LinkId id;
    FunctionKind kind = FunctionKind::E1;
    LinkWeights weights;
    std::size_t baseline_input = 0;
    std::vector<FunctionLink> children;

    friend bool operator==(const FunctionLink&, const FunctionLink&) = default;
};

// Attachment point for a new link: a parent link, or the root sum.
using Parent = std::optional<LinkId>;
inline constexpr Parent kRoot = std::nullopt;

class SfnModel {
public:
    SfnModel(std::size_t input_arity, std::size_t max_depth);

    std::size_t input_arity() const { return input_arity_; }
    std::size_t max_depth() const { return max_depth_; }
    const std::vector<FunctionLink>& roots() const { return roots_; }
    bool empty() const { return roots_.empty(); }

    // Appends a child under `parent` (or a new root). The parent keeps its
    // baseline variable, so a multiplier of zero leaves the output unchanged.
    // Throws DepthExceeded, InvalidParent, std::out_of_range for a bad input index.
    LinkId add_link(Parent parent, FunctionKind kind, std::size_t baseline_input, LinkWeights weights);

    // Detaches the link and its whole subtree. Throws UnknownLink.
    FunctionLink remove_link(LinkId id);

    const FunctionLink* find(LinkId id) const;
    // Depth of a link, roots at 1. Throws UnknownLink.
    std::size_t link_depth(LinkId id) const;
    // Parent of a link (kRoot for roots). Throws UnknownLink.
    Parent parent_of(LinkId id) const;

    // Link ids in canonical order: depth-first, pre-order, roots in order.
    std::vector<LinkId> link_ids() const;
    std::size_t link_count() const;
    std::size_t count_weights() const;
    // Longest root-to-leaf chain of links; 0 for the empty model.
    std::size_t depth() const;

    // Canonical order: depth-first over roots, per link multiplier then shape.
    std::vector<double> flatten_weights() const;
    // Throws LengthMismatch when the vector length differs from count_weights().
    void load_weights(std::span<const double> values);

    // Next id add_link will hand out. Ids are never reused.
    std::uint64_t next_id() const { return next_id_; }

    friend bool operator==(const SfnModel&, const SfnModel&) = default;

private:
    friend SfnModel parse_model(std::string_view text);

    FunctionLink* find_mutable(LinkId id);

    std::size_t input_arity_;
    std::size_t max_depth_;
    std::vector<FunctionLink> roots_;
    std::uint64_t next_id_ = 1;
};

// E_kind(z) with z = input[baseline] + sum of child outputs.
// Throws NonFiniteResult on overflow.
double eval_link(const FunctionLink& link, std::span<const double> input);
// Sum of root outputs; 0 for the empty model.
double eval_model(const SfnModel& model, std::span<const double> input);

// Infix rendering with 17 significant digits, e.g.
//   1.25*(x0^2+1)^0.5 + 0.3*log((x1 + 0.9*exp(1.1*x1))^2+1)
// Negative constants are parenthesized. The empty model renders as "0".
std::string render_symbolic(const SfnModel& model);

// Line-oriented text format; see README for the grammar.
std::string serialize_model(const SfnModel& model);
// Throws ParseError naming the offending line.
SfnModel parse_model(std::string_view text);

// FNV-1a over the serialized form; equal models hash equal.
std::uint64_t model_hash(const SfnModel& model);

} // namespace sfn
