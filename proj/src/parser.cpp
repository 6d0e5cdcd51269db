#include "moreforge/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <array>

#include "moreforge/transport.hpp"

namespace moreforge {

namespace {

// --- tokens ---------------------------------------------------------------

enum class Dim { None, Length, Speed, Mass, Angle, Force };

enum class Tok { Word, Number, Quantity };

struct Token {
    Tok kind = Tok::Word;
    std::string text; // lowercased word, or the unit alias for quantities
    double value = 0.0;
    Dim dim = Dim::None;
    bool integer = false;
    Span span;
};

struct Unit {
    std::string_view alias;
    Dim dim;
    double factor; // to metres, m/s, kg, degrees or newtons
};

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Longest aliases first so "m/s" wins over "m".
const std::vector<Unit>& unit_table()
{
    static const std::vector<Unit> units = [] {
        std::vector<Unit> u = {
            {"kilometres per hour", Dim::Speed, 1.0 / 3.6}, {"kilometers per hour", Dim::Speed, 1.0 / 3.6},
            {"metres per second", Dim::Speed, 1.0},        {"meters per second", Dim::Speed, 1.0},
            {"metre per second", Dim::Speed, 1.0},         {"meter per second", Dim::Speed, 1.0},
            {"km per hour", Dim::Speed, 1.0 / 3.6},        {"km/h", Dim::Speed, 1.0 / 3.6},
            {"kmh", Dim::Speed, 1.0 / 3.6},                {"kph", Dim::Speed, 1.0 / 3.6},
            {"m/s", Dim::Speed, 1.0},                      {"centimetres", Dim::Length, 0.01},
            {"centimeters", Dim::Length, 0.01},            {"centimetre", Dim::Length, 0.01},
            {"centimeter", Dim::Length, 0.01},             {"cm", Dim::Length, 0.01},
            {"metres", Dim::Length, 1.0},                  {"meters", Dim::Length, 1.0},
            {"metre", Dim::Length, 1.0},                   {"meter", Dim::Length, 1.0},
            {"m", Dim::Length, 1.0},                       {"kilograms", Dim::Mass, 1.0},
            {"kilogram", Dim::Mass, 1.0},                  {"kg", Dim::Mass, 1.0},
            {"grams", Dim::Mass, 0.001},                   {"gram", Dim::Mass, 0.001},
            {"g", Dim::Mass, 0.001},                       {"\xC2\xB0", Dim::Angle, 1.0},
            {"\xC2\xBA", Dim::Angle, 1.0},                 {"degrees", Dim::Angle, 1.0},
            {"degree", Dim::Angle, 1.0},                   {"deg", Dim::Angle, 1.0},
            {"radians", Dim::Angle, kRadToDeg},            {"radian", Dim::Angle, kRadToDeg},
            {"rad", Dim::Angle, kRadToDeg},                {"newtons", Dim::Force, 1.0},
            {"newton", Dim::Force, 1.0},                   {"n", Dim::Force, 1.0},
        };
        std::stable_sort(u.begin(), u.end(), [](const Unit& a, const Unit& b) { return a.alias.size() > b.alias.size(); });
        return u;
    }();
    return units;
}

// Units outside the table that would otherwise be silently read as bare numbers.
bool foreign_unit(std::string_view w)
{
    static const std::vector<std::string_view> names = {
        "ft",    "feet",   "foot",   "mi",     "mile",   "miles", "mph",     "lb",      "lbs",    "pound",
        "pounds", "oz",    "ounce",  "ounces", "s",      "sec",   "secs",    "second",  "seconds", "ms",
        "min",   "mins",   "minute", "minutes", "h",     "hr",    "hrs",     "hour",    "hours",  "km",
        "mm",    "mg",     "kn",     "knot",   "knots",  "yd",    "yard",    "yards",   "j",      "joule",
        "joules", "w",     "watt",   "watts",  "pa",     "l",     "ml",      "rpm",     "hz",     "kj",
    };
    if (w.find('/') != std::string_view::npos || w.find('^') != std::string_view::npos) {
        return true;
    }
    return std::find(names.begin(), names.end(), w) != names.end();
}

const std::map<std::string, int, std::less<>>& word_numbers()
{
    static const std::map<std::string, int, std::less<>> m = {
        {"one", 1}, {"two", 2}, {"three", 3}, {"four", 4}, {"five", 5},   {"six", 6},
        {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10}, {"eleven", 11}, {"twelve", 12},
    };
    return m;
}

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool starts_with_ci(std::string_view text, std::size_t at, std::string_view prefix)
{
    if (at + prefix.size() > text.size()) {
        return false;
    }
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (lower(text[at + i]) != prefix[i]) {
            return false;
        }
    }
    return true;
}

std::size_t skip_spaces(std::string_view text, std::size_t at)
{
    while (at < text.size() && (text[at] == ' ' || text[at] == '\t')) {
        ++at;
    }
    return at;
}

// Length of the 3-byte right single quote at `at`, or 0.
std::size_t curly_quote(std::string_view text, std::size_t at)
{
    return text.substr(at, 3) == "\xE2\x80\x99" ? 3 : 0;
}

std::vector<Token> tokenize(std::string_view text)
{
    std::vector<Token> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char c = text[pos];
        const bool sign = (c == '-' || c == '+') && pos + 1 < text.size() && is_digit(text[pos + 1]) &&
                          (pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1])));
        if (is_digit(c) || sign || (c == '.' && pos + 1 < text.size() && is_digit(text[pos + 1]))) {
            std::size_t end = pos + (sign ? 1 : 0);
            bool integer = true;
            while (end < text.size() && is_digit(text[end])) {
                ++end;
            }
            if (end + 1 < text.size() && text[end] == '.' && is_digit(text[end + 1])) {
                integer = false;
                ++end;
                while (end < text.size() && is_digit(text[end])) {
                    ++end;
                }
            }
            if (end < text.size() && (text[end] == 'e' || text[end] == 'E')) {
                std::size_t e = end + 1;
                if (e < text.size() && (text[e] == '-' || text[e] == '+')) {
                    ++e;
                }
                if (e < text.size() && is_digit(text[e])) {
                    integer = false;
                    end = e;
                    while (end < text.size() && is_digit(text[end])) {
                        ++end;
                    }
                }
            }
            Token t;
            t.kind = Tok::Number;
            t.value = std::stod(std::string(text.substr(pos, end - pos)));
            t.integer = integer;
            t.span = {pos, end};

            const std::size_t u = skip_spaces(text, end);
            for (const auto& unit : unit_table()) {
                if (!starts_with_ci(text, u, unit.alias)) {
                    continue;
                }
                const std::size_t after = u + unit.alias.size();
                const bool word_unit = is_alpha(unit.alias.back());
                if (word_unit && after < text.size() &&
                    (std::isalnum(static_cast<unsigned char>(text[after])) || text[after] == '/' || text[after] == '^')) {
                    continue;
                }
                t.kind = Tok::Quantity;
                t.dim = unit.dim;
                t.value *= unit.factor;
                t.text = std::string(unit.alias);
                t.span.end = after;
                break;
            }
            if (t.kind == Tok::Number && u < text.size() && is_alpha(text[u])) {
                std::size_t w = u;
                while (w < text.size() && !std::isspace(static_cast<unsigned char>(text[w])) && text[w] != ',' &&
                       text[w] != ';' && text[w] != ')' && !(text[w] == '.' && (w + 1 == text.size() || text[w + 1] == ' '))) {
                    ++w;
                }
                std::string word;
                for (std::size_t i = u; i < w; ++i) {
                    word += lower(text[i]);
                }
                if (foreign_unit(word)) {
                    throw Error(ErrorKind::Syntax,
                                "unknown unit '" + std::string(text.substr(u, w - u)) + "' at offset " + std::to_string(u) +
                                    " (units: m, cm, m/s, km/h, kg, g, deg, rad, N)");
                }
            }
            out.push_back(t);
            pos = t.span.end;
            continue;
        }
        if (is_alpha(c)) {
            std::size_t end = pos;
            std::string word;
            while (end < text.size()) {
                if (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '\'' ||
                    (text[end] == '-' && end + 1 < text.size() && is_alpha(text[end + 1]))) {
                    word += lower(text[end]);
                    ++end;
                } else if (const std::size_t q = curly_quote(text, end)) {
                    word += '\'';
                    end += q;
                } else {
                    break;
                }
            }
            Token t;
            t.text = word;
            t.span = {pos, end};
            if (const auto it = word_numbers().find(word); it != word_numbers().end()) {
                t.kind = Tok::Number;
                t.value = it->second;
                t.integer = true;
            }
            out.push_back(t);
            pos = end;
            continue;
        }
        ++pos;
    }
    return out;
}

// --- cues -----------------------------------------------------------------

struct Cue {
    Phenomenon phenomenon;
    std::vector<std::string_view> words; // trailing '*' matches a prefix
    double weight = 1.0;
};

const std::vector<Cue>& cue_table()
{
    using P = Phenomenon;
    static const std::vector<Cue> cues = {
        {P::Gravity, {"launched"}},          {P::Gravity, {"launch*"}},       {P::Gravity, {"thrown"}},
        {P::Gravity, {"throw*"}},            {P::Gravity, {"projectile*"}},   {P::Gravity, {"dropped"}},
        {P::Gravity, {"drops"}},             {P::Gravity, {"fall*"}},         {P::Gravity, {"toss*"}},
        {P::Gravity, {"fired"}},             {P::Gravity, {"free", "fall"}},  {P::Gravity, {"cannonball*"}},
        {P::Acceleration, {"incline*"}},     {P::Acceleration, {"ramp*"}},    {P::Acceleration, {"slope*"}},
        {P::Acceleration, {"slides", "down"}}, {P::Acceleration, {"slide", "down"}},
        {P::Acceleration, {"sliding", "down"}},
        {P::Collision, {"collid*"}},         {P::Collision, {"collision*"}},  {P::Collision, {"crash*"}},
        {P::Collision, {"head-on"}},         {P::Collision, {"hits"}},        {P::Collision, {"impact*"}},
        {P::Collision, {"towards", "each", "other"}}, {P::Collision, {"toward", "each", "other"}},
        {P::Oscillation, {"spring*"}},       {P::Oscillation, {"oscillat*"}}, {P::Oscillation, {"vibrat*"}},
        {P::Oscillation, {"simple", "harmonic"}},
        {P::Momentum, {"cradle*"}, 2.0},     {P::Momentum, {"newton's"}},     {P::Momentum, {"momentum"}},
        {P::Buoyancy, {"float*"}},           {P::Buoyancy, {"buoyan*"}},      {P::Buoyancy, {"water"}},
        {P::Buoyancy, {"fluid*"}},           {P::Buoyancy, {"liquid*"}},      {P::Buoyancy, {"submerged"}},
        {P::Inertia, {"push*"}},             {P::Inertia, {"slid*"}},         {P::Inertia, {"coast*"}},
        {P::Inertia, {"kick*"}},             {P::Inertia, {"shove*"}},        {P::Inertia, {"inertia"}},
        {P::Pendulum, {"pendulum*"}},        {P::Pendulum, {"swing*"}},
        {P::Pulley, {"pulley*"}},            {P::Pulley, {"atwood*"}},
    };
    return cues;
}

constexpr std::array<Phenomenon, 9> kPriority = {
    Phenomenon::Collision,  Phenomenon::Pendulum, Phenomenon::Pulley,  Phenomenon::Buoyancy, Phenomenon::Oscillation,
    Phenomenon::Momentum, Phenomenon::Acceleration, Phenomenon::Inertia, Phenomenon::Gravity,
};

bool word_matches(std::string_view pattern, const Token& t)
{
    if (t.kind != Tok::Word && !(t.kind == Tok::Number && !t.text.empty())) {
        return false;
    }
    if (!pattern.empty() && pattern.back() == '*') {
        return t.text.rfind(pattern.substr(0, pattern.size() - 1), 0) == 0;
    }
    return t.text == pattern;
}

// Length in tokens of `words` matching at token i, or 0.
std::size_t phrase_at(const std::vector<Token>& toks, std::size_t i, const std::vector<std::string_view>& words)
{
    if (i + words.size() > toks.size()) {
        return 0;
    }
    for (std::size_t k = 0; k < words.size(); ++k) {
        if (!word_matches(words[k], toks[i + k])) {
            return 0;
        }
    }
    return words.size();
}

struct CueMatch {
    Phenomenon phenomenon;
    double weight;
    Span span;
};

std::vector<CueMatch> match_cues(const std::vector<Token>& toks)
{
    std::vector<CueMatch> out;
    std::size_t i = 0;
    while (i < toks.size()) {
        const Cue* best = nullptr;
        std::size_t best_len = 0;
        for (const auto& cue : cue_table()) {
            const std::size_t len = phrase_at(toks, i, cue.words);
            if (len > best_len) {
                best = &cue;
                best_len = len;
            }
        }
        if (best) {
            out.push_back({best->phenomenon, best->weight, {toks[i].span.begin, toks[i + best_len - 1].span.end}});
            i += best_len;
        } else {
            ++i;
        }
    }
    return out;
}

std::string trim(std::string_view text)
{
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) {
        --e;
    }
    return std::string(text.substr(b, e - b));
}

void check_prompt(std::string_view prompt)
{
    if (prompt.size() > kMaxPromptLength) {
        throw Error(ErrorKind::Syntax, "prompt longer than " + std::to_string(kMaxPromptLength) + " bytes");
    }
    if (trim(prompt).empty()) {
        throw Error(ErrorKind::Syntax, "empty prompt");
    }
}

// --- parameter binding ----------------------------------------------------

struct Slot {
    std::string_view param;
    Dim dim;
    std::vector<std::vector<std::string_view>> before; // keyword phrases preceding the value
    std::vector<std::vector<std::string_view>> after;  // keyword phrases following it
    bool fallback = false;                              // takes unlabelled values of its dimension
    int member = -1;                                    // 0/1 inside an (a, b) pair
};

using KW = std::vector<std::vector<std::string_view>>;

const std::vector<Slot>& slots_for(Phenomenon p)
{
    static const KW kMass = {{"mass"}, {"masses"}, {"weighs"}, {"weighing"}};
    static const KW kSpeed = {{"velocity"}, {"speed"}, {"at"}, {"moving"}};
    static const KW kRadius = {{"radius"}};
    static const KW kRestitution = {{"restitution"}, {"coefficient", "of", "restitution"}};
    static const KW kFriction = {{"friction"}, {"friction", "coefficient"}, {"coefficient", "of", "friction"}};
    static const KW kSize = {{"size"}, {"side"}, {"sized"}};
    static const KW kSizeAfter = {{"block"}, {"box"}, {"boxes"}, {"cube"}, {"cubes"}, {"wide"}};

    static const std::map<Phenomenon, std::vector<Slot>> table = {
        {Phenomenon::Gravity,
         {
             {"launch_speed", Dim::Speed, kSpeed, {}, true},
             {"launch_angle", Dim::Angle, {{"angle"}, {"at"}, {"elevation"}}, {}, true},
             {"launch_height", Dim::Length, {{"height"}, {"from"}, {"above"}, {"off"}}, {{"high"}, {"above"}, {"tall"}}, true},
             {"radius", Dim::Length, kRadius, {}, false},
             {"mass", Dim::Mass, kMass, {}, true},
             {"restitution", Dim::None, kRestitution, {}, false},
         }},
        {Phenomenon::Acceleration,
         {
             {"incline_angle", Dim::Angle, {{"angle"}, {"at"}, {"inclined"}}, {}, true},
             {"friction", Dim::None, kFriction, {}, false},
             {"mass", Dim::Mass, kMass, {}, true},
             {"block_size", Dim::Length, kSize, kSizeAfter, false},
             {"incline_length", Dim::Length, {{"length"}, {"long"}}, {{"long"}, {"ramp"}, {"slope"}, {"incline"}}, true},
         }},
        {Phenomenon::Collision,
         {
             {"mass_a", Dim::Mass, kMass, {}, true, 0},
             {"mass_b", Dim::Mass, kMass, {}, true, 1},
             {"speed_a", Dim::Speed, kSpeed, {}, true, 0},
             {"speed_b", Dim::Speed, kSpeed, {}, true, 1},
             {"radius", Dim::Length, kRadius, {}, false},
             {"gap", Dim::Length, {{"gap"}, {"distance"}, {"separated", "by"}}, {{"apart"}, {"away"}}, true},
             {"restitution", Dim::None, kRestitution, {}, false},
         }},
        {Phenomenon::Oscillation,
         {
             {"mass", Dim::Mass, kMass, {}, true},
             {"stiffness", Dim::None, {{"stiffness"}, {"spring", "constant"}, {"constant"}}, {}, false},
             {"damping", Dim::None, {{"damping"}}, {}, false},
             {"amplitude", Dim::Length, {{"amplitude"}, {"pulled", "down", "by"}, {"displaced", "by"}, {"stretched", "by"}},
              {}, true},
             {"rest_length", Dim::Length, {{"rest", "length"}, {"natural", "length"}}, {{"long"}}, false},
             {"radius", Dim::Length, kRadius, {}, false},
         }},
        {Phenomenon::Momentum,
         {
             {"radius", Dim::Length, kRadius, {}, false},
             {"string_length", Dim::Length, {{"string"}, {"strings"}, {"length"}, {"hanging", "from"}, {"on"}},
              {{"long"}, {"string"}, {"strings"}}, true},
             {"release_angle", Dim::Angle, {{"angle"}, {"to"}, {"from"}}, {}, true},
             {"mass", Dim::Mass, kMass, {}, true},
             {"restitution", Dim::None, kRestitution, {}, false},
         }},
        {Phenomenon::Buoyancy,
         {
             {"radius", Dim::Length, kRadius, {}, true},
             {"density_ratio", Dim::None, {{"density", "ratio"}, {"relative", "density"}, {"specific", "gravity"}}, {}, false},
             {"fluid_density", Dim::None, {{"fluid", "density"}, {"water", "density"}}, {}, false},
             {"drag_ratio", Dim::None, {{"drag", "ratio"}, {"drag"}}, {}, false},
         }},
        {Phenomenon::Inertia,
         {
             {"mass", Dim::Mass, kMass, {}, true},
             {"speed", Dim::Speed, kSpeed, {}, true},
             {"friction", Dim::None, kFriction, {}, false},
             {"block_size", Dim::Length, kSize, kSizeAfter, true},
         }},
        {Phenomenon::Pendulum,
         {
             {"length", Dim::Length, {{"length"}, {"string", "length"}, {"long"}, {"string"}, {"rod"}}, {{"long"}}, true},
             {"release_angle", Dim::Angle, {{"angle"}, {"from"}, {"at"}, {"to"}}, {}, true},
             {"mass", Dim::Mass, kMass, {}, true},
             {"radius", Dim::Length, kRadius, {}, false},
         }},
        {Phenomenon::Pulley,
         {
             {"mass_a", Dim::Mass, kMass, {}, true, 0},
             {"mass_b", Dim::Mass, kMass, {}, true, 1},
             {"box_size", Dim::Length, kSize, {}, false},
             {"separation", Dim::Length, {{"separation"}, {"spaced"}}, {{"apart"}}, false},
             {"drop", Dim::Length, {{"hanging"}, {"hang"}, {"hangs"}}, {{"below"}, {"down"}}, true},
         }},
    };
    return table.at(p);
}

std::size_t body_count(Phenomenon p)
{
    return p == Phenomenon::Collision || p == Phenomenon::Pulley ? 2 : 1;
}

bool count_noun(const Token& t)
{
    static const std::vector<std::string_view> nouns = {
        "ball", "balls", "block", "blocks", "box",   "boxes",   "mass",   "masses", "bob",
        "bobs", "object", "objects", "sphere", "spheres", "weight", "weights", "cube", "cubes", "puck", "pucks",
    };
    return t.kind == Tok::Word && std::find(nouns.begin(), nouns.end(), t.text) != nouns.end();
}

enum class Side { Left, Right };

struct DirectionPhrase {
    std::vector<std::string_view> words;
    int motion; // sign of the implied x velocity, 0 when only a side is named
    Side side;
};

const std::vector<DirectionPhrase>& direction_phrases()
{
    static const std::vector<DirectionPhrase> d = {
        {{"from", "the", "right"}, -1, Side::Right}, {{"from", "the", "left"}, 1, Side::Left},
        {{"to", "the", "left"}, -1, Side::Left},     {{"to", "the", "right"}, 1, Side::Right},
        {{"towards", "the", "left"}, -1, Side::Left}, {{"towards", "the", "right"}, 1, Side::Right},
        {{"toward", "the", "left"}, -1, Side::Left}, {{"toward", "the", "right"}, 1, Side::Right},
        {{"leftward*"}, -1, Side::Left},             {{"rightward*"}, 1, Side::Right},
        {{"on", "the", "left"}, 0, Side::Left},      {{"on", "the", "right"}, 0, Side::Right},
    };
    return d;
}

struct FixedPhrase {
    Phenomenon phenomenon;
    std::vector<std::string_view> words;
    std::string_view param;
    double value;
};

const std::vector<FixedPhrase>& fixed_phrases()
{
    using P = Phenomenon;
    static const std::vector<FixedPhrase> f = {
        {P::Gravity, {"dropped"}, "launch_speed", 0.0},
        {P::Gravity, {"released", "from", "rest"}, "launch_speed", 0.0},
        {P::Gravity, {"horizontally"}, "launch_angle", 0.0},
        {P::Gravity, {"straight", "up"}, "launch_angle", 90.0},
        {P::Gravity, {"vertically"}, "launch_angle", 90.0},
        {P::Collision, {"perfectly", "elastic"}, "restitution", 1.0},
        {P::Collision, {"elastic"}, "restitution", 1.0},
        {P::Collision, {"elastically"}, "restitution", 1.0},
        {P::Collision, {"perfectly", "inelastic"}, "restitution", 0.0},
        {P::Collision, {"stick", "together"}, "restitution", 0.0},
        {P::Acceleration, {"frictionless"}, "friction", 0.0},
        {P::Acceleration, {"without", "friction"}, "friction", 0.0},
        {P::Inertia, {"frictionless"}, "friction", 0.0},
        {P::Inertia, {"without", "friction"}, "friction", 0.0},
        {P::Oscillation, {"undamped"}, "damping", 0.0},
        {P::Buoyancy, {"half", "the", "density"}, "density_ratio", 0.5},
        {P::Buoyancy, {"half", "as", "dense"}, "density_ratio", 0.5},
        {P::Buoyancy, {"a", "quarter", "of", "the", "density"}, "density_ratio", 0.25},
    };
    return f;
}

class Binder {
public:
    explicit Binder(std::string_view text) : text_(text) {}

    void bind(const std::string& param, double value, std::string rule, Span span)
    {
        if (const auto it = bound_.find(param); it != bound_.end()) {
            const double prev = it->second.value;
            if (std::abs(prev - value) > 1e-12 * std::max(1.0, std::abs(prev))) {
                throw Error(ErrorKind::Contradiction,
                          "'" + std::string(text_.substr(it->second.span.begin, it->second.span.end - it->second.span.begin)) +
                              "' sets " + param + " = " + format_number(prev) + " but '" +
                              std::string(text_.substr(span.begin, span.end - span.begin)) + "' sets it to " +
                              format_number(value),
                          "params." + param);
            }
        } else {
            bound_[param] = {value, span};
        }
        rules_.push_back({std::move(rule) + ":" + param, span});
    }

    bool has(std::string_view param) const { return bound_.count(std::string(param)) > 0; }

    void unresolved(Span s) { unresolved_.push_back(s); }

    std::map<std::string, double> values() const
    {
        std::map<std::string, double> out;
        for (const auto& [k, v] : bound_) {
            out[k] = v.value;
        }
        return out;
    }

    std::vector<MatchedRule> rules_;
    std::vector<Span> unresolved_;

private:
    struct Bound {
        double value;
        Span span;
    };
    std::string_view text_;
    std::map<std::string, Bound> bound_;
};

// Token distance from the nearest keyword phrase to quantity i, or -1.
int keyword_distance(const std::vector<Token>& toks, std::size_t i, const Slot& slot)
{
    int best = -1;
    // Preceding keywords: scan back to the previous number.
    std::size_t lo = i;
    while (lo > 0 && toks[lo - 1].kind == Tok::Word && i - lo < 6) {
        --lo;
    }
    for (const auto& kw : slot.before) {
        for (std::size_t s = lo; s + kw.size() <= i; ++s) {
            if (phrase_at(toks, s, kw)) {
                const int d = static_cast<int>(i - (s + kw.size()));
                if (best < 0 || d < best) {
                    best = d;
                }
            }
        }
    }
    for (const auto& kw : slot.after) {
        for (std::size_t s = i + 1; s <= i + 3 && s < toks.size(); ++s) {
            if (toks[s].kind != Tok::Word) {
                break;
            }
            if (phrase_at(toks, s, kw)) {
                const int d = static_cast<int>(s - i - 1);
                if (best < 0 || d < best) {
                    best = d;
                }
            }
        }
    }
    return best;
}

bool near_word(const std::vector<Token>& toks, std::size_t i, std::initializer_list<std::string_view> words)
{
    for (std::size_t k = i > 2 ? i - 2 : 0; k < std::min(toks.size(), i + 3); ++k) {
        if (k == i || toks[k].kind != Tok::Word) {
            continue;
        }
        for (auto w : words) {
            if (toks[k].text == w) {
                return true;
            }
        }
    }
    return false;
}

// The buoyancy template only builds floaters.
bool says_sinks(const std::vector<Token>& toks)
{
    return std::any_of(toks.begin(), toks.end(), [](const Token& t) {
        return t.kind == Tok::Word && (t.text == "sinks" || t.text == "sink" || t.text == "sinking");
    });
}

// Merges overlapping rules so matched_rules stays a partition of spans.
std::vector<MatchedRule> merge_rules(std::vector<MatchedRule> rules)
{
    std::sort(rules.begin(), rules.end(), [](const MatchedRule& a, const MatchedRule& b) {
        return a.span.begin != b.span.begin ? a.span.begin < b.span.begin : a.span.end < b.span.end;
    });
    std::vector<MatchedRule> out;
    for (auto& r : rules) {
        if (!out.empty() && r.span.begin < out.back().span.end) {
            out.back().span.end = std::max(out.back().span.end, r.span.end);
            out.back().rule += "+" + r.rule;
        } else {
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::string unit_name(std::string_view unit) { return unit.empty() ? "" : " " + std::string(unit); }

} // namespace

Json trace_to_json(const ParseTrace& trace)
{
    Json rules = Json::array();
    for (const auto& r : trace.matched_rules) {
        rules.push_back({{"rule", r.rule}, {"span", {r.span.begin, r.span.end}}});
    }
    Json inferred = Json::array();
    for (const auto& f : trace.inferred_fields) {
        inferred.push_back({{"path", f.path}, {"source", f.source}});
    }
    Json unresolved = Json::array();
    for (const auto& s : trace.unresolved) {
        unresolved.push_back(Json::array({s.begin, s.end}));
    }
    Json params = Json::object();
    for (const auto& [k, v] : trace.params.values) {
        params[k] = v;
    }
    return Json{{"phenomenon", std::string(to_string(trace.phenomenon))},
                {"confidence", trace.confidence},
                {"matched_rules", rules},
                {"inferred_fields", inferred},
                {"unresolved", unresolved},
                {"params", params},
                {"bound_params", trace.bound_params}};
}

Classification classify_phenomenon(std::string_view prompt)
{
    check_prompt(prompt);
    const auto toks = tokenize(prompt);
    const auto cues = match_cues(toks);
    if (cues.empty()) {
        throw Error(ErrorKind::Unclassifiable, "no physics cue in prompt: \"" + trim(prompt) + "\"");
    }
    std::map<Phenomenon, double> score;
    double total = 0.0;
    for (const auto& c : cues) {
        score[c.phenomenon] += c.weight;
        total += c.weight;
    }
    Classification out;
    double best = -1.0;
    for (auto p : kPriority) {
        if (score[p] > best) {
            best = score[p];
            out.phenomenon = p;
        }
    }
    out.confidence = best / total;
    for (const auto& c : cues) {
        out.cues.push_back({"cue:" + std::string(to_string(c.phenomenon)), c.span});
    }
    return out;
}

ParseResult parse_prompt(std::string_view prompt)
{
    const auto cls = classify_phenomenon(prompt);
    const Phenomenon p = cls.phenomenon;
    const auto toks = tokenize(prompt);
    const auto& slots = slots_for(p);
    Binder b(prompt);

    if (p == Phenomenon::Buoyancy && says_sinks(toks)) {
        throw Error(ErrorKind::Contradiction, "the buoyancy template models a floating body; the prompt says it sinks",
                    "params.density_ratio");
    }

    std::vector<bool> used(toks.size(), false);
    auto span_of = [&](std::size_t i, std::size_t j) { return Span{toks[i].span.begin, toks[j].span.end}; };
    std::vector<std::pair<std::size_t, int>> subject_at; // noun index -> body 0/1

    // Fixed phrases.
    for (const auto& f : fixed_phrases()) {
        if (f.phenomenon != p) {
            continue;
        }
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (used[i]) {
                continue;
            }
            if (const std::size_t len = phrase_at(toks, i, f.words)) {
                b.bind(std::string(f.param), f.value, "phrase", span_of(i, i + len - 1));
                std::fill(used.begin() + static_cast<long>(i), used.begin() + static_cast<long>(i + len), true);
            }
        }
    }

    // Direction phrases.
    for (std::size_t i = 0; i < toks.size(); ++i) {
        for (const auto& d : direction_phrases()) {
            const std::size_t len = used[i] ? 0 : phrase_at(toks, i, d.words);
            if (!len) {
                continue;
            }
            const Span s = span_of(i, i + len - 1);
            std::fill(used.begin() + static_cast<long>(i), used.begin() + static_cast<long>(i + len), true);
            if ((p == Phenomenon::Gravity || p == Phenomenon::Inertia) && d.motion != 0) {
                b.bind("direction", d.motion, "direction", s);
            } else if (p == Phenomenon::Pendulum) {
                b.bind("side", d.side == Side::Right ? 1.0 : -1.0, "direction", s);
            } else if (p == Phenomenon::Momentum) {
                b.bind("pulled_from_right", d.side == Side::Right ? 1.0 : 0.0, "direction", s);
            } else {
                b.unresolved(s);
            }
            break;
        }
    }

    // Ordinals: "the first two balls", "the last ball", "the second mass".
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (used[i] || toks[i].kind != Tok::Word) {
            continue;
        }
        const auto& w = toks[i].text;
        const bool left = w == "first" || w == "leftmost";
        const bool right = w == "last" || w == "rightmost";
        const bool second = w == "second" || w == "other";
        if (!left && !right && !second) {
            continue;
        }
        std::size_t j = i + 1;
        double n = 1.0;
        if (j < toks.size() && toks[j].kind == Tok::Number && toks[j].integer && !used[j]) {
            n = toks[j].value;
            ++j;
        }
        if (j >= toks.size() || !count_noun(toks[j])) {
            continue;
        }
        const Span s = span_of(i, j);
        std::fill(used.begin() + static_cast<long>(i), used.begin() + static_cast<long>(j + 1), true);
        if (p == Phenomenon::Momentum && !second) {
            b.bind("pulled_count", n, "ordinal", s);
            b.bind("pulled_from_right", right ? 1.0 : 0.0, "ordinal", s);
        } else if (body_count(p) == 2 && n == 1.0) {
            // Values after the ordinal belong to that body.
            b.rules_.push_back({"ordinal:subject", s});
            subject_at.push_back({j, second || right ? 1 : 0});
        } else {
            b.unresolved(s);
        }
    }

    // Counts: "five balls", "2 boxes", "both balls", "5 steel balls".
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (used[i]) {
            continue;
        }
        double n = 0.0;
        if (toks[i].kind == Tok::Number && toks[i].integer) {
            n = toks[i].value;
        } else if (toks[i].kind == Tok::Word && toks[i].text == "both") {
            n = 2.0;
        } else {
            continue;
        }
        std::size_t j = i + 1;
        if (j < toks.size() && !count_noun(toks[j]) && toks[j].kind == Tok::Word && j + 1 < toks.size() &&
            count_noun(toks[j + 1]) && !used[j + 1]) {
            ++j;
        }
        if (j >= toks.size() || !count_noun(toks[j]) || used[j]) {
            continue;
        }
        const Span s = span_of(i, j);
        std::fill(used.begin() + static_cast<long>(i), used.begin() + static_cast<long>(j + 1), true);
        if (p == Phenomenon::Momentum) {
            b.bind("ball_count", n, "count", s);
        } else if (static_cast<std::size_t>(n) != body_count(p)) {
            throw Error(ErrorKind::Contradiction,
                        "'" + std::string(prompt.substr(s.begin, s.end - s.begin)) + "' names " + format_number(n) +
                            " bodies but the " + std::string(to_string(p)) + " template has " +
                            std::to_string(body_count(p)),
                        "bodies");
        } else {
            b.rules_.push_back({"count", s});
        }
    }

    // Quantities and bare numbers.
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (used[i] || toks[i].kind == Tok::Word) {
            continue;
        }
        const Token& t = toks[i];
        if (t.kind == Tok::Number && !t.text.empty()) {
            continue; // spelled-out number not attached to a noun
        }
        int current_subject = -1;
        for (const auto& [at, who] : subject_at) {
            if (at < i) {
                current_subject = who;
            }
        }
        int best_d = -1;
        const Slot* best = nullptr;
        for (const auto& slot : slots) {
            if (slot.dim != t.dim) {
                continue;
            }
            if (slot.member >= 0 && current_subject >= 0 && slot.member != current_subject) {
                continue;
            }
            const int d = keyword_distance(toks, i, slot);
            if (d >= 0 && (best_d < 0 || d < best_d)) {
                best_d = d;
                best = &slot;
            }
        }
        const bool each = near_word(toks, i, {"each", "both"});
        if (best && best->member >= 0 && current_subject < 0 && !each) {
            // A keyword shared by a pair goes to the first member still free.
            for (const auto& slot : slots) {
                if (slot.dim == t.dim && slot.member >= 0 && !b.has(slot.param)) {
                    best = &slot;
                    break;
                }
            }
        }
        if (!best) {
            for (const auto& slot : slots) {
                if (slot.dim == t.dim && slot.fallback && !b.has(slot.param) &&
                    (slot.member < 0 || current_subject < 0 || slot.member == current_subject)) {
                    best = &slot;
                    break;
                }
            }
        }
        if (!best) {
            b.unresolved(t.span);
            continue;
        }
        if (best->member >= 0 && each) {
            for (const auto& slot : slots) {
                if (slot.dim == t.dim && slot.member >= 0) {
                    b.bind(std::string(slot.param), t.value, "quantity", t.span);
                }
            }
        } else {
            b.bind(std::string(best->param), t.value, "quantity", t.span);
        }
    }

    ParseTrace trace;
    trace.phenomenon = p;
    trace.confidence = cls.confidence;
    std::vector<MatchedRule> rules = b.rules_;
    rules.insert(rules.end(), cls.cues.begin(), cls.cues.end());
    trace.matched_rules = merge_rules(std::move(rules));
    trace.unresolved = b.unresolved_;
    std::sort(trace.unresolved.begin(), trace.unresolved.end(),
              [](const Span& a, const Span& c) { return a.begin < c.begin; });

    TemplateParams params = default_params(p);
    const auto bound = b.values();
    for (const auto& info : template_param_schema(p)) {
        const std::string name(info.name);
        if (const auto it = bound.find(name); it != bound.end()) {
            params.values[name] = info.integer ? std::round(it->second) : it->second;
            trace.bound_params.push_back(name);
        } else {
            trace.inferred_fields.push_back(
                {"params." + name, "class default " + format_number(info.default_value) + unit_name(info.unit)});
        }
    }
    check_params(params);
    trace.params = params;

    ScenarioSpec spec = build_template(params);
    spec.label = trim(prompt);
    require_valid(spec);
    return {std::move(spec), std::move(trace)};
}

ScenarioSpec external_parse(std::string_view prompt, const std::string& url)
{
    check_prompt(prompt);
    const std::string body = http_post_json(url, Json{{"prompt", std::string(prompt)}}.dump());
    ScenarioSpec spec = parse_spec(body);
    require_valid(spec);
    return spec;
}

std::string verbalize(const PromptTemplate& tmpl, TemplateParams params)
{
    for (const auto& [name, value] : tmpl.fixed) {
        params.values[name] = value;
    }
    return tmpl.render(params);
}

} // namespace moreforge
