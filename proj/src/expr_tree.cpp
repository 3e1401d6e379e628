#include "sfn/expr_tree.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "sfn/error.hpp"
#include "sfn/link_math.hpp"

namespace sfn {

std::string_view to_string(FunctionKind kind) {
    switch (kind) {
    case FunctionKind::E1: return "E1";
    case FunctionKind::E2: return "E2";
    case FunctionKind::E3: return "E3";
    }
    return "?";
}

FunctionKind parse_kind(std::string_view text) {
    if (text == "E1") return FunctionKind::E1;
    if (text == "E2") return FunctionKind::E2;
    if (text == "E3") return FunctionKind::E3;
    throw Error("unknown function kind '" + std::string(text) + "'");
}

void throw_non_finite(FunctionKind kind, double z) {
    std::ostringstream msg;
    msg << to_string(kind) << " is not finite at argument " << z;
    throw NonFiniteResult(msg.str());
}

namespace {

template <class Link, class Fn>
bool visit_preorder(Link& link, std::size_t depth, Fn& fn) {
    if (!fn(link, depth)) return false;
    for (auto& child : link.children)
        if (!visit_preorder(child, depth + 1, fn)) return false;
    return true;
}

// Calls fn(link, depth) in canonical order; fn returns false to stop early.
template <class Roots, class Fn>
void for_each_link(Roots& roots, Fn fn) {
    for (auto& root : roots)
        if (!visit_preorder(root, 1, fn)) return;
}

std::size_t subtree_height(const FunctionLink& link) {
    std::size_t h = 0;
    for (const auto& child : link.children) h = std::max(h, subtree_height(child));
    return h + 1;
}

void check_weights(FunctionKind kind, const LinkWeights& weights) {
    if (has_shape(kind) != weights.shape.has_value())
        throw Error(std::string(to_string(kind)) + (has_shape(kind) ? " needs a shape weight" : " takes no shape weight"));
    if (!std::isfinite(weights.multiplier) || (weights.shape && !std::isfinite(*weights.shape)))
        throw Error("link weights must be finite");
}

} // namespace

SfnModel::SfnModel(std::size_t input_arity, std::size_t max_depth)
    : input_arity_(input_arity), max_depth_(max_depth) {
    if (input_arity == 0) throw Error("input arity must be positive");
    if (max_depth == 0) throw Error("max depth must be positive");
}

FunctionLink* SfnModel::find_mutable(LinkId id) {
    FunctionLink* found = nullptr;
    for_each_link(roots_, [&](FunctionLink& link, std::size_t) {
        if (link.id == id) found = &link;
        return found == nullptr;
    });
    return found;
}

const FunctionLink* SfnModel::find(LinkId id) const {
    return const_cast<SfnModel*>(this)->find_mutable(id);
}

std::size_t SfnModel::link_depth(LinkId id) const {
    std::size_t result = 0;
    for_each_link(roots_, [&](const FunctionLink& link, std::size_t depth) {
        if (link.id == id) result = depth;
        return result == 0;
    });
    if (result == 0) throw UnknownLink("no link with id " + std::to_string(id.value));
    return result;
}

Parent SfnModel::parent_of(LinkId id) const {
    for (const auto& root : roots_)
        if (root.id == id) return kRoot;
    Parent result;
    for_each_link(roots_, [&](const FunctionLink& link, std::size_t) {
        for (const auto& child : link.children)
            if (child.id == id) result = link.id;
        return !result.has_value();
    });
    if (!result) throw UnknownLink("no link with id " + std::to_string(id.value));
    return result;
}

LinkId SfnModel::add_link(Parent parent, FunctionKind kind, std::size_t baseline_input, LinkWeights weights) {
    if (baseline_input >= input_arity_)
        throw std::out_of_range("baseline input " + std::to_string(baseline_input) + " outside arity " +
                                std::to_string(input_arity_));
    check_weights(kind, weights);

    std::vector<FunctionLink>* siblings = &roots_;
    if (parent) {
        FunctionLink* host = find_mutable(*parent);
        if (host == nullptr) throw InvalidParent("no link with id " + std::to_string(parent->value));
        if (link_depth(*parent) + 1 > max_depth_)
            throw DepthExceeded("adding under link " + std::to_string(parent->value) + " exceeds max depth " +
                                std::to_string(max_depth_));
        siblings = &host->children;
    }

    FunctionLink link;
    link.id = LinkId{next_id_++};
    link.kind = kind;
    link.weights = weights;
    link.baseline_input = baseline_input;
    siblings->push_back(std::move(link));
    return siblings->back().id;
}

FunctionLink SfnModel::remove_link(LinkId id) {
    auto take = [&](std::vector<FunctionLink>& siblings) -> std::optional<FunctionLink> {
        auto it = std::find_if(siblings.begin(), siblings.end(), [&](const FunctionLink& l) { return l.id == id; });
        if (it == siblings.end()) return std::nullopt;
        FunctionLink removed = std::move(*it);
        siblings.erase(it);
        return removed;
    };
    if (auto removed = take(roots_)) return std::move(*removed);

    std::optional<FunctionLink> removed;
    for_each_link(roots_, [&](FunctionLink& link, std::size_t) {
        removed = take(link.children);
        return !removed.has_value();
    });
    if (!removed) throw UnknownLink("no link with id " + std::to_string(id.value));
    return std::move(*removed);
}

std::vector<LinkId> SfnModel::link_ids() const {
    std::vector<LinkId> ids;
    for_each_link(roots_, [&](const FunctionLink& link, std::size_t) {
        ids.push_back(link.id);
        return true;
    });
    return ids;
}

std::size_t SfnModel::link_count() const {
    std::size_t n = 0;
    for_each_link(roots_, [&](const FunctionLink&, std::size_t) { return ++n, true; });
    return n;
}

std::size_t SfnModel::count_weights() const {
    std::size_t n = 0;
    for_each_link(roots_, [&](const FunctionLink& link, std::size_t) { return n += weight_count(link.kind), true; });
    return n;
}

std::size_t SfnModel::depth() const {
    std::size_t d = 0;
    for (const auto& root : roots_) d = std::max(d, subtree_height(root));
    return d;
}

std::vector<double> SfnModel::flatten_weights() const {
    std::vector<double> out;
    out.reserve(count_weights());
    for_each_link(roots_, [&](const FunctionLink& link, std::size_t) {
        out.push_back(link.weights.multiplier);
        if (link.weights.shape) out.push_back(*link.weights.shape);
        return true;
    });
    return out;
}

void SfnModel::load_weights(std::span<const double> values) {
    if (values.size() != count_weights())
        throw LengthMismatch("expected " + std::to_string(count_weights()) + " weights, got " +
                             std::to_string(values.size()));
    std::size_t i = 0;
    for_each_link(roots_, [&](FunctionLink& link, std::size_t) {
        link.weights.multiplier = values[i++];
        if (link.weights.shape) link.weights.shape = values[i++];
        return true;
    });
}

double eval_link(const FunctionLink& link, std::span<const double> input) {
    if (link.baseline_input >= input.size()) throw LengthMismatch("input shorter than baseline index");
    double z = input[link.baseline_input];
    for (const auto& child : link.children) z += eval_link(child, input);
    return link_value(link.kind, link.weights, z);
}

double eval_model(const SfnModel& model, std::span<const double> input) {
    if (input.size() != model.input_arity())
        throw LengthMismatch("input has " + std::to_string(input.size()) + " values, model arity is " +
                             std::to_string(model.input_arity()));
    double y = 0.0;
    for (const auto& root : model.roots()) y += eval_link(root, input);
    return y;
}

// ---------------------------------------------------------------------------
// Text forms

namespace {

std::string number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Negative constants are wrapped so "^" and "*" never meet a bare minus sign.
std::string constant(double x) {
    std::string s = number(x);
    return std::signbit(x) ? "(" + s + ")" : s;
}

void render_link(const FunctionLink& link, std::string& out) {
    std::string arg = "x" + std::to_string(link.baseline_input);
    if (!link.children.empty()) {
        std::string inner = arg;
        for (const auto& child : link.children) {
            inner += " + ";
            render_link(child, inner);
        }
        arg = "(" + inner + ")";
    }
    const double m = link.weights.multiplier;
    switch (link.kind) {
    case FunctionKind::E1:
        out += constant(m) + "*(" + arg + "^2+1)^" + constant(*link.weights.shape);
        break;
    case FunctionKind::E2:
        out += constant(m) + "*exp(" + constant(*link.weights.shape) + "*" + arg + ")";
        break;
    case FunctionKind::E3:
        out += constant(m) + "*log(" + arg + "^2+1)";
        break;
    }
}

void serialize_link(const FunctionLink& link, std::uint64_t parent, std::ostringstream& out) {
    out << "link " << link.id.value << ' ' << parent << ' ' << to_string(link.kind) << ' ' << link.baseline_input
        << ' ' << number(link.weights.multiplier);
    if (link.weights.shape) out << ' ' << number(*link.weights.shape);
    out << '\n';
    for (const auto& child : link.children) serialize_link(child, link.id.value, out);
}

template <class T>
T parse_number(std::string_view token, std::size_t line) {
    T value{};
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw ParseError("bad number '" + std::string(token) + "'", line);
    return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) tokens.push_back(line.substr(i, j - i));
        i = j;
    }
    return tokens;
}

} // namespace

std::string render_symbolic(const SfnModel& model) {
    if (model.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& root : model.roots()) {
        if (!first) out += " + ";
        first = false;
        render_link(root, out);
    }
    return out;
}

std::string serialize_model(const SfnModel& model) {
    std::ostringstream out;
    out << "sfn-model 1\n";
    out << "arity " << model.input_arity() << '\n';
    out << "max_depth " << model.max_depth() << '\n';
    out << "next_id " << model.next_id() << '\n';
    for (const auto& root : model.roots()) serialize_link(root, 0, out);
    return out.str();
}

SfnModel parse_model(std::string_view text) {
    std::size_t arity = 0, max_depth = 0;
    std::uint64_t next_id = 0;
    bool header_seen = false;
    std::optional<SfnModel> model;
    std::size_t line_no = 0;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        auto tokens = split_ws(line);
        if (tokens.empty() || tokens[0].front() == '#') {
            if (end == text.size()) break;
            continue;
        }
        const std::string_view key = tokens[0];
        if (key == "sfn-model") {
            if (tokens.size() != 2 || tokens[1] != "1") throw ParseError("unsupported model format version", line_no);
            header_seen = true;
        } else if (!header_seen) {
            throw ParseError("missing 'sfn-model 1' header", line_no);
        } else if (key == "arity" || key == "max_depth" || key == "next_id") {
            if (tokens.size() != 2) throw ParseError("expected '" + std::string(key) + " <n>'", line_no);
            if (model) throw ParseError("'" + std::string(key) + "' after first link", line_no);
            auto n = parse_number<std::uint64_t>(tokens[1], line_no);
            if (key == "arity") arity = n;
            else if (key == "max_depth") max_depth = n;
            else next_id = n;
        } else if (key == "link") {
            if (!model) {
                if (arity == 0 || max_depth == 0) throw ParseError("arity and max_depth must precede links", line_no);
                model.emplace(arity, max_depth);
            }
            if (tokens.size() < 6) throw ParseError("link line needs id, parent, kind, input, weights", line_no);
            const auto id = parse_number<std::uint64_t>(tokens[1], line_no);
            const auto parent = parse_number<std::uint64_t>(tokens[2], line_no);
            FunctionKind kind;
            try {
                kind = parse_kind(tokens[3]);
            } catch (const Error& e) {
                throw ParseError(e.what(), line_no);
            }
            const auto input = parse_number<std::size_t>(tokens[4], line_no);
            if (tokens.size() != 5 + weight_count(kind))
                throw ParseError(std::string(to_string(kind)) + " expects " + std::to_string(weight_count(kind)) +
                                     " weights",
                                 line_no);
            LinkWeights weights;
            weights.multiplier = parse_number<double>(tokens[5], line_no);
            if (has_shape(kind)) weights.shape = parse_number<double>(tokens[6], line_no);
            if (id == 0) throw ParseError("link id 0 is reserved for the root", line_no);
            if (model->find(LinkId{id}) != nullptr) throw ParseError("duplicate link id", line_no);

            try {
                Parent where = parent == 0 ? kRoot : Parent(LinkId{parent});
                model->next_id_ = id;
                model->add_link(where, kind, input, weights);
            } catch (const ParseError&) {
                throw;
            } catch (const std::exception& e) {
                throw ParseError(e.what(), line_no);
            }
            model->next_id_ = 0;
        } else {
            throw ParseError("unknown key '" + std::string(key) + "'", line_no);
        }
        if (end == text.size()) break;
    }

    if (!header_seen) throw ParseError("missing 'sfn-model 1' header", line_no);
    if (!model) {
        if (arity == 0 || max_depth == 0) throw ParseError("arity and max_depth are required", line_no);
        model.emplace(arity, max_depth);
    }
    std::uint64_t max_id = 0;
    for (LinkId id : model->link_ids()) max_id = std::max(max_id, id.value);
    if (next_id != 0 && next_id <= max_id) throw ParseError("next_id must exceed every link id", line_no);
    model->next_id_ = std::max(next_id, max_id + 1);
    return std::move(*model);
}

std::uint64_t model_hash(const SfnModel& model) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : serialize_model(model)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace sfn
