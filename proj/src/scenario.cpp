#include "lifted/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "lifted/errors.hpp"
#include "lifted/grounded.hpp"

namespace lifted {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool valid_symbol(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') {
            return false;
        }
    }
    return true;
}

Rational parse_rational(const json& j, const std::string& what) {
    if (j.is_number()) return Rational::from_double(j.get<double>());
    if (j.is_string()) {
        try {
            return Rational::parse(j.get<std::string>());
        } catch (const std::exception& e) {
            throw ParseError(what + ": " + e.what());
        }
    }
    throw ParseError(what + " must be a number or a rational string like \"3/4\"");
}

Distribution parse_distribution(const json& j, const std::string& what) {
    if (!j.is_object() || j.size() != 1) {
        throw ParseError(what + " must be one of {\"dirac\":...},{\"urn\":...},{\"cat\":...}");
    }
    if (j.contains("dirac")) {
        return Distribution::dirac(Value(j.at("dirac").get<std::string>()));
    }
    if (j.contains("urn")) {
        std::vector<Value> values;
        for (const auto& v : j.at("urn")) values.emplace_back(v.get<std::string>());
        if (values.empty()) throw ParseError(what + ": urn must be non-empty");
        return Distribution::urn(values);
    }
    if (j.contains("cat")) {
        std::map<Value, Rational> probs;
        for (const auto& [k, v] : j.at("cat").items()) {
            probs.emplace(Value(k), parse_rational(v, what + ".cat." + k));
        }
        try {
            return Distribution::categorical(probs);
        } catch (const std::exception& e) {
            throw ParseError(what + ": " + e.what());
        }
    }
    // Anything else (e.g. continuous densities) is out of scope.
    throw ParseError(what + ": unsupported distribution kind '" + j.begin().key() + "'");
}

ordered_json distribution_to_json(const Distribution& d) {
    ordered_json j;
    switch (d.kind()) {
        case DistKind::dirac:
            j["dirac"] = d.dirac_value().symbol;
            break;
        case DistKind::urn: {
            ordered_json arr = ordered_json::array();
            for (const auto& [v, c] : d.urn_counts()) {
                for (long i = 0; i < c; ++i) arr.push_back(v.symbol);
            }
            j["urn"] = std::move(arr);
            break;
        }
        case DistKind::categorical: {
            ordered_json obj = ordered_json::object();
            for (const auto& [v, p] : d.categorical_probs()) obj[v.symbol] = p.str();
            j["cat"] = std::move(obj);
            break;
        }
    }
    return j;
}

Constraint parse_constraint(const json& j) {
    Constraint c;
    c.slot = j.at("slot").get<std::string>();
    const std::string op = j.at("op").get<std::string>();
    if (op == "eq") {
        c.op = Constraint::Op::eq;
        c.operands.emplace_back(j.at("value").get<std::string>());
    } else if (op == "neq") {
        c.op = Constraint::Op::neq;
        c.operands.emplace_back(j.at("value").get<std::string>());
    } else if (op == "in") {
        c.op = Constraint::Op::in_set;
        for (const auto& v : j.at("values")) c.operands.emplace_back(v.get<std::string>());
        if (c.operands.empty()) throw ParseError("constraint 'in' needs values");
    } else {
        throw ParseError("unknown constraint op '" + op + "'");
    }
    return c;
}

ordered_json constraint_to_json(const Constraint& c) {
    ordered_json j;
    j["slot"] = c.slot;
    switch (c.op) {
        case Constraint::Op::eq:
            j["op"] = "eq";
            j["value"] = c.operands.front().symbol;
            break;
        case Constraint::Op::neq:
            j["op"] = "neq";
            j["value"] = c.operands.front().symbol;
            break;
        case Constraint::Op::in_set: {
            j["op"] = "in";
            ordered_json arr = ordered_json::array();
            for (const auto& v : c.operands) arr.push_back(v.symbol);
            j["values"] = std::move(arr);
            break;
        }
    }
    return j;
}

SlotSource parse_slot_source(const json& j, const std::string& what) {
    if (j.contains("value")) return SlotSource::value(Value(j.at("value").get<std::string>()));
    if (j.contains("copy")) {
        const auto& c = j.at("copy");
        return SlotSource::copy(c.at(0).get<int>(), c.at(1).get<std::string>());
    }
    throw ParseError(what + " needs \"value\" or \"copy\"");
}

ordered_json slot_source_to_json(const SlotSource& s) {
    ordered_json j;
    if (s.literal) {
        j["value"] = s.literal->symbol;
    } else {
        j["copy"] = ordered_json::array({s.copy_from->first, s.copy_from->second});
    }
    return j;
}

Effect parse_effect(const json& j) {
    const std::string op = j.at("op").get<std::string>();
    if (op == "set") {
        return Effect::set(j.at("participant").get<int>(), j.at("slot").get<std::string>(),
                           parse_slot_source(j, "effect set"));
    }
    if (op == "remove") {
        return Effect::remove(j.at("participant").get<int>(), j.at("slot").get<std::string>());
    }
    if (op == "consume") {
        return Effect::consume(j.at("participant").get<int>());
    }
    if (op == "produce") {
        std::map<SlotName, SlotSource> slots;
        for (const auto& [k, v] : j.at("slots").items()) {
            slots.emplace(k, parse_slot_source(v, "effect produce." + k));
        }
        return Effect::produce(std::move(slots));
    }
    throw ParseError("unknown effect op '" + op + "'");
}

ordered_json effect_to_json(const Effect& e) {
    ordered_json j;
    switch (e.kind) {
        case Effect::Kind::set_slot:
            j["op"] = "set";
            j["participant"] = e.participant;
            j["slot"] = e.slot;
            j.update(slot_source_to_json(e.source));
            break;
        case Effect::Kind::remove_slot:
            j["op"] = "remove";
            j["participant"] = e.participant;
            j["slot"] = e.slot;
            break;
        case Effect::Kind::consume:
            j["op"] = "consume";
            j["participant"] = e.participant;
            break;
        case Effect::Kind::produce: {
            j["op"] = "produce";
            ordered_json slots = ordered_json::object();
            for (const auto& [k, v] : e.produced) slots[k] = slot_source_to_json(v);
            j["slots"] = std::move(slots);
            break;
        }
    }
    return j;
}

void validate_scenario(const Scenario& s) {
    auto fail = [](const std::string& msg) { throw ValidationError("scenario: " + msg); };

    if (s.format_version != 1) fail("unsupported format_version");
    if (s.locations.empty()) fail("no locations");
    std::set<std::string> locs;
    for (const auto& l : s.locations) {
        if (!valid_symbol(l)) fail("bad location symbol '" + l + "'");
        if (!locs.insert(l).second) fail("duplicate location '" + l + "'");
    }
    for (const auto& [a, b] : s.edges) {
        if (!locs.count(a) || !locs.count(b)) fail("edge references unknown location");
        if (a == b) fail("self-loop edge at '" + a + "'");
    }
    // Connectivity.
    if (!s.locations.empty()) {
        std::set<std::string> seen{s.locations.front()};
        std::vector<std::string> stack{s.locations.front()};
        while (!stack.empty()) {
            const std::string cur = stack.back();
            stack.pop_back();
            for (const auto& [a, b] : s.edges) {
                const std::string* next = nullptr;
                if (a == cur) next = &b;
                if (b == cur) next = &a;
                if (next && seen.insert(*next).second) stack.push_back(*next);
            }
        }
        if (seen.size() != s.locations.size()) fail("location graph is not connected");
    }

    if (s.initial.empty()) fail("no initial hypotheses");
    std::set<SlotName> declared;
    for (const auto& [w, cs] : s.initial) {
        if (w.sign() <= 0) fail("initial weight must be positive");
        if (auto v = validate(cs.state)) fail("initial state invalid: " + v->message);
        for (const auto& [entity, mult] : cs.state.formula.groups) {
            for (const auto& [slot, label] : entity.slots) {
                if (!valid_symbol(slot)) fail("bad slot symbol '" + slot + "'");
                declared.insert(slot);
            }
        }
    }
    for (const auto& schema : s.schemas) {
        for (const auto& e : schema.effects) {
            if (e.kind == Effect::Kind::set_slot) declared.insert(e.slot);
            if (e.kind == Effect::Kind::produce) {
                for (const auto& [slot, src] : e.produced) declared.insert(slot);
            }
        }
    }

    std::set<std::string> names;
    for (const auto& schema : s.schemas) {
        if (!valid_symbol(schema.name)) fail("bad schema name '" + schema.name + "'");
        if (!names.insert(schema.name).second) fail("duplicate schema '" + schema.name + "'");
        if (schema.arity() == 0) fail("schema '" + schema.name + "' has no participants");
        if (schema.rate.sign() <= 0) fail("schema '" + schema.name + "' needs a positive rate");
        for (const auto& constraints : schema.participants) {
            for (const auto& c : constraints) {
                if (!declared.count(c.slot)) {
                    fail("schema '" + schema.name + "' constrains undeclared slot '" + c.slot +
                         "'");
                }
            }
        }
        const int arity = static_cast<int>(schema.arity());
        for (const auto& e : schema.effects) {
            auto check_part = [&](int p) {
                if (p < 0 || p >= arity) {
                    fail("schema '" + schema.name + "' effect references participant " +
                         std::to_string(p));
                }
            };
            switch (e.kind) {
                case Effect::Kind::set_slot:
                    check_part(e.participant);
                    if (e.source.copy_from) check_part(e.source.copy_from->first);
                    break;
                case Effect::Kind::remove_slot:
                case Effect::Kind::consume:
                    check_part(e.participant);
                    break;
                case Effect::Kind::produce:
                    for (const auto& [slot, src] : e.produced) {
                        if (src.copy_from) check_part(src.copy_from->first);
                    }
                    break;
            }
        }
    }

    std::set<std::string> sensor_ids;
    const Rational half(1, 2);
    for (const auto& sensor : s.sensors) {
        if (!valid_symbol(sensor.id)) fail("bad sensor id '" + sensor.id + "'");
        if (!sensor_ids.insert(sensor.id).second) fail("duplicate sensor '" + sensor.id + "'");
        if (!declared.count(sensor.slot)) {
            fail("sensor '" + sensor.id + "' watches undeclared slot '" + sensor.slot + "'");
        }
        if (sensor.false_positive.sign() < 0 || !(sensor.false_positive < half) ||
            sensor.false_negative.sign() < 0 || !(sensor.false_negative < half)) {
            fail("sensor '" + sensor.id + "' noise must be in [0, 0.5)");
        }
        if (sensor.slot == s.location_slot && !locs.count(sensor.value.symbol)) {
            fail("sensor '" + sensor.id + "' watches unknown location '" + sensor.value.symbol +
                 "'");
        }
        if (sensor.kind == SensorSpec::Kind::identify) {
            if (!declared.count(sensor.id_slot)) {
                fail("identify sensor '" + sensor.id + "' reveals undeclared slot '" +
                     sensor.id_slot + "'");
            }
            if (sensor.false_positive.sign() != 0 || sensor.false_negative.sign() != 0) {
                fail("identify sensor '" + sensor.id + "' must be noise-free");
            }
        }
    }

    // make_belief checks positivity, validity and normalization.
    make_belief(s.initial);
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    try {
        Scenario s;
        s.format_version = doc.value("format_version", 1);
        s.name = doc.at("name").get<std::string>();
        for (const auto& l : doc.at("locations")) s.locations.push_back(l.get<std::string>());
        for (const auto& e : doc.value("edges", json::array())) {
            s.edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
        }
        s.location_slot = doc.value("location_slot", "loc");
        s.horizon = doc.value("horizon", 0);

        for (const auto& h : doc.at("initial")) {
            LiftedState state;
            for (const auto& [label, dj] : h.at("labels").items()) {
                if (!valid_symbol(label)) throw ParseError("bad label symbol '" + label + "'");
                state.context.bindings.emplace(label,
                                               parse_distribution(dj, "label '" + label + "'"));
            }
            for (const auto& ej : h.at("entities")) {
                Entity entity;
                for (const auto& [slot, label] : ej.at("slots").items()) {
                    entity.slots.emplace(slot, label.get<std::string>());
                }
                const long count = ej.value("count", 1);
                if (count < 1) throw ParseError("entity count must be >= 1");
                state.formula.groups[entity] += count;
            }
            s.initial.emplace_back(parse_rational(h.value("weight", json(1.0)), "initial weight"),
                                   canonicalize(state));
        }

        for (const auto& sj : doc.value("schemas", json::array())) {
            ActionSchema schema;
            schema.name = sj.at("name").get<std::string>();
            schema.rate = parse_rational(sj.value("rate", json(1.0)),
                                         "schema '" + schema.name + "' rate");
            for (const auto& pj : sj.at("participants")) {
                std::vector<Constraint> constraints;
                for (const auto& cj : pj) constraints.push_back(parse_constraint(cj));
                schema.participants.push_back(std::move(constraints));
            }
            for (const auto& ej : sj.value("effects", json::array())) {
                schema.effects.push_back(parse_effect(ej));
            }
            s.schemas.push_back(std::move(schema));
        }

        for (const auto& sj : doc.value("sensors", json::array())) {
            SensorSpec spec;
            spec.id = sj.at("id").get<std::string>();
            const std::string kind = sj.at("kind").get<std::string>();
            if (kind == "presence") {
                spec.kind = SensorSpec::Kind::presence;
            } else if (kind == "identify") {
                spec.kind = SensorSpec::Kind::identify;
            } else {
                throw ParseError("unknown sensor kind '" + kind + "'");
            }
            spec.slot = sj.at("slot").get<std::string>();
            spec.value = Value(sj.at("value").get<std::string>());
            spec.false_positive =
                parse_rational(sj.value("fp", json(0.0)), "sensor '" + spec.id + "' fp");
            spec.false_negative =
                parse_rational(sj.value("fn", json(0.0)), "sensor '" + spec.id + "' fn");
            spec.id_slot = sj.value("id_slot", "ID");
            s.sensors.push_back(std::move(spec));
        }

        validate_scenario(s);
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_json_text(ss.str());
}

std::string scenario_to_json_text(const Scenario& s) {
    ordered_json doc;
    doc["format_version"] = s.format_version;
    doc["name"] = s.name;
    doc["locations"] = s.locations;
    ordered_json edges = ordered_json::array();
    for (const auto& [a, b] : s.edges) edges.push_back(ordered_json::array({a, b}));
    doc["edges"] = std::move(edges);
    doc["location_slot"] = s.location_slot;
    doc["horizon"] = s.horizon;

    ordered_json initial = ordered_json::array();
    for (const auto& [w, cs] : s.initial) {
        ordered_json h;
        h["weight"] = w.str();
        ordered_json labels = ordered_json::object();
        for (const auto& [label, dist] : cs.state.context.bindings) {
            labels[label] = distribution_to_json(dist);
        }
        h["labels"] = std::move(labels);
        ordered_json entities = ordered_json::array();
        for (const auto& [entity, mult] : cs.state.formula.groups) {
            ordered_json ej;
            ej["count"] = mult;
            ordered_json slots = ordered_json::object();
            for (const auto& [slot, label] : entity.slots) slots[slot] = label;
            ej["slots"] = std::move(slots);
            entities.push_back(std::move(ej));
        }
        h["entities"] = std::move(entities);
        initial.push_back(std::move(h));
    }
    doc["initial"] = std::move(initial);

    ordered_json schemas = ordered_json::array();
    for (const auto& schema : s.schemas) {
        ordered_json sj;
        sj["name"] = schema.name;
        sj["rate"] = schema.rate.str();
        ordered_json parts = ordered_json::array();
        for (const auto& constraints : schema.participants) {
            ordered_json pj = ordered_json::array();
            for (const auto& c : constraints) pj.push_back(constraint_to_json(c));
            parts.push_back(std::move(pj));
        }
        sj["participants"] = std::move(parts);
        ordered_json effects = ordered_json::array();
        for (const auto& e : schema.effects) effects.push_back(effect_to_json(e));
        sj["effects"] = std::move(effects);
        schemas.push_back(std::move(sj));
    }
    doc["schemas"] = std::move(schemas);

    ordered_json sensors = ordered_json::array();
    for (const auto& sensor : s.sensors) {
        ordered_json sj;
        sj["id"] = sensor.id;
        sj["kind"] = sensor.kind == SensorSpec::Kind::presence ? "presence" : "identify";
        sj["slot"] = sensor.slot;
        sj["value"] = sensor.value.symbol;
        sj["fp"] = sensor.false_positive.str();
        sj["fn"] = sensor.false_negative.str();
        if (sensor.kind == SensorSpec::Kind::identify) sj["id_slot"] = sensor.id_slot;
        sensors.push_back(std::move(sj));
    }
    doc["sensors"] = std::move(sensors);
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Built-in scenarios
// ---------------------------------------------------------------------------

namespace {

std::map<std::string, std::string> parse_params(const std::string& spec, std::string& name) {
    std::map<std::string, std::string> params;
    std::stringstream ss(spec);
    std::string part;
    bool first = true;
    while (std::getline(ss, part, ':')) {
        if (first) {
            name = part;
            first = false;
            continue;
        }
        const auto eq = part.find('=');
        if (eq == std::string::npos) {
            throw UnknownScenario("bad scenario parameter '" + part + "'");
        }
        params[part.substr(0, eq)] = part.substr(eq + 1);
    }
    return params;
}

long param_long(const std::map<std::string, std::string>& params, const std::string& key,
                long fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    return std::stol(it->second);
}

std::vector<std::string> param_list(const std::map<std::string, std::string>& params,
                                    const std::string& key,
                                    const std::vector<std::string>& fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    std::vector<std::string> out;
    std::stringstream ss(it->second);
    std::string part;
    while (std::getline(ss, part, '+')) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

ActionSchema unary_schema(const std::string& name, std::vector<Constraint> pre,
                          std::vector<Effect> effects) {
    ActionSchema schema;
    schema.name = name;
    schema.participants.push_back(std::move(pre));
    schema.effects = std::move(effects);
    schema.rate = Rational(1);
    return schema;
}

Constraint eq(const SlotName& slot, const std::string& value) {
    Constraint c;
    c.slot = slot;
    c.op = Constraint::Op::eq;
    c.operands.emplace_back(value);
    return c;
}

Scenario warehouse_scenario(const std::map<std::string, std::string>& params) {
    const long n = param_long(params, "n", 10);
    if (n < 1) throw UnknownScenario("warehouse needs n >= 1");
    const std::string fp = params.count("fp") ? params.at("fp") : "0";
    const std::string fn = params.count("fn") ? params.at("fn") : "0";

    Scenario s;
    s.name = "warehouse";
    s.locations = {"parking", "service", "stor1", "stor2", "stor3"};
    s.edges = {{"parking", "stor2"},
               {"stor2", "stor1"},
               {"stor2", "stor3"},
               {"service", "stor2"},
               {"parking", "stor3"}};
    s.horizon = 33;

    LiftedState init;
    Entity forklift;
    forklift.slots.emplace("loc", "LPARK");
    forklift.slots.emplace("ID", "LID");
    init.formula.groups.emplace(forklift, n);
    std::vector<Value> ids;
    for (long i = 1; i <= n; ++i) ids.emplace_back("fl" + std::to_string(i));
    init.context.bindings.emplace("LID", Distribution::urn(ids));
    init.context.bindings.emplace("LPARK", Distribution::dirac(Value("parking")));
    s.initial.emplace_back(Rational(1), canonicalize(init));

    for (const auto& loc : s.locations) {
        s.schemas.push_back(unary_schema("stay_" + loc, {eq("loc", loc)}, {}));
    }
    s.schemas.push_back(unary_schema("refuel", {eq("loc", "service")}, {}));
    for (const auto& [a, b] : s.edges) {
        s.schemas.push_back(unary_schema("move_" + a + "_" + b, {eq("loc", a)},
                                         {Effect::set(0, "loc", SlotSource::value(Value(b)))}));
        s.schemas.push_back(unary_schema("move_" + b + "_" + a, {eq("loc", b)},
                                         {Effect::set(0, "loc", SlotSource::value(Value(a)))}));
    }

    for (const auto& loc : s.locations) {
        SensorSpec sensor;
        sensor.id = "presence_" + loc;
        sensor.kind = SensorSpec::Kind::presence;
        sensor.slot = "loc";
        sensor.value = Value(loc);
        sensor.false_positive = Rational::parse(fp);
        sensor.false_negative = Rational::parse(fn);
        s.sensors.push_back(std::move(sensor));
    }
    SensorSpec ident;
    ident.id = "identify_service";
    ident.kind = SensorSpec::Kind::identify;
    ident.slot = "loc";
    ident.value = Value("service");
    ident.id_slot = "ID";
    s.sensors.push_back(std::move(ident));

    validate_scenario(s);
    return s;
}

Scenario office_scenario(const std::map<std::string, std::string>& params) {
    const long n = param_long(params, "n", 3);
    if (n < 1) throw UnknownScenario("office needs n >= 1");
    const auto items = param_list(params, "items", {"water", "coffee", "paper", "document"});
    const std::set<std::string> item_set(items.begin(), items.end());
    for (const auto& item : items) {
        if (item != "water" && item != "coffee" && item != "paper" && item != "document") {
            throw UnknownScenario("office: unknown item '" + item + "'");
        }
    }

    Scenario s;
    s.name = "office";
    s.locations = {"hall", "kitchen", "printerroom"};
    s.edges = {{"hall", "kitchen"}, {"hall", "printerroom"}};
    s.horizon = 20;

    LiftedState init;
    Entity person;
    person.slots.emplace("loc", "LHALL");
    person.slots.emplace("ID", "LPID");
    person.slots.emplace("hold", "LNONE");
    init.formula.groups.emplace(person, n);
    std::vector<Value> ids;
    for (long i = 1; i <= n; ++i) ids.emplace_back("p" + std::to_string(i));
    init.context.bindings.emplace("LPID", Distribution::urn(ids));
    init.context.bindings.emplace("LHALL", Distribution::dirac(Value("hall")));
    init.context.bindings.emplace("LNONE", Distribution::dirac(Value("none")));
    s.initial.emplace_back(Rational(1), canonicalize(init));

    for (const auto& loc : s.locations) {
        s.schemas.push_back(unary_schema("stay_" + loc, {eq("loc", loc)}, {}));
    }
    for (const auto& [a, b] : s.edges) {
        s.schemas.push_back(unary_schema("move_" + a + "_" + b, {eq("loc", a)},
                                         {Effect::set(0, "loc", SlotSource::value(Value(b)))}));
        s.schemas.push_back(unary_schema("move_" + b + "_" + a, {eq("loc", b)},
                                         {Effect::set(0, "loc", SlotSource::value(Value(a)))}));
    }
    auto hold_to = [](const std::string& v) {
        return Effect::set(0, "hold", SlotSource::value(Value(v)));
    };
    if (item_set.count("water")) {
        s.schemas.push_back(unary_schema(
            "pickup_water", {eq("loc", "kitchen"), eq("hold", "none")}, {hold_to("water")}));
        s.schemas.push_back(unary_schema(
            "fill_machine", {eq("loc", "kitchen"), eq("hold", "water")}, {hold_to("none")}));
    }
    if (item_set.count("coffee")) {
        s.schemas.push_back(unary_schema("brew", {eq("loc", "kitchen"), eq("hold", "none")},
                                         {hold_to("coffee")}));
    }
    if (item_set.count("paper")) {
        s.schemas.push_back(unary_schema(
            "pickup_paper", {eq("loc", "printerroom"), eq("hold", "none")}, {hold_to("paper")}));
        s.schemas.push_back(unary_schema(
            "load_printer", {eq("loc", "printerroom"), eq("hold", "paper")}, {hold_to("none")}));
    }
    if (item_set.count("document")) {
        s.schemas.push_back(unary_schema(
            "print", {eq("loc", "printerroom"), eq("hold", "none")}, {hold_to("document")}));
    }
    if (!items.empty()) {
        Constraint holding;
        holding.slot = "hold";
        holding.op = Constraint::Op::in_set;
        for (const auto& item : items) holding.operands.emplace_back(item);
        s.schemas.push_back(unary_schema("putdown", {holding}, {hold_to("none")}));
    }

    for (const auto& loc : s.locations) {
        SensorSpec sensor;
        sensor.id = "presence_" + loc;
        sensor.kind = SensorSpec::Kind::presence;
        sensor.slot = "loc";
        sensor.value = Value(loc);
        s.sensors.push_back(std::move(sensor));
    }
    SensorSpec ident;
    ident.id = "identify_printer";
    ident.kind = SensorSpec::Kind::identify;
    ident.slot = "loc";
    ident.value = Value("printerroom");
    ident.id_slot = "ID";
    s.sensors.push_back(std::move(ident));

    validate_scenario(s);
    return s;
}

}  // namespace

Scenario builtin_scenario(const std::string& name_with_params) {
    std::string name;
    const auto params = parse_params(name_with_params, name);
    if (name == "warehouse") return warehouse_scenario(params);
    if (name == "office") return office_scenario(params);
    throw UnknownScenario("unknown scenario '" + name + "' (have: warehouse, office)");
}

// ---------------------------------------------------------------------------
// Trace sampling
// ---------------------------------------------------------------------------

namespace {

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Index into `weights` picked proportionally (double precision is fine
/// here: sampling only generates ground truth, inference stays exact).
std::size_t pick_weighted(std::mt19937_64& rng, const std::vector<Rational>& weights) {
    double total = 0;
    for (const auto& w : weights) total += w.to_double();
    double u = uniform01(rng) * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        u -= weights[i].to_double();
        if (u <= 0) return i;
    }
    return weights.size() - 1;
}

GroundState sample_ground(const LiftedState& s, std::mt19937_64& rng) {
    std::map<Label, std::map<Value, long>> urns;
    for (const auto& [label, dist] : s.context.bindings) {
        if (dist.is_urn()) urns[label] = dist.urn_counts();
    }
    GroundState out;
    for (const auto& [entity, mult] : s.formula.groups) {
        for (long i = 0; i < mult; ++i) {
            GroundEntity ge;
            for (const auto& [slot, label] : entity.slots) {
                const Distribution& dist = s.context.bindings.at(label);
                switch (dist.kind()) {
                    case DistKind::dirac:
                        ge.emplace(slot, dist.dirac_value());
                        break;
                    case DistKind::urn: {
                        auto& remaining = urns.at(label);
                        long total = 0;
                        for (const auto& [v, c] : remaining) total += c;
                        long pickpos = static_cast<long>(bounded(rng, total));
                        for (auto& [v, c] : remaining) {
                            if (pickpos < c) {
                                ge.emplace(slot, v);
                                --c;
                                break;
                            }
                            pickpos -= c;
                        }
                        break;
                    }
                    case DistKind::categorical: {
                        std::vector<Value> values;
                        std::vector<Rational> weights;
                        for (const auto& [v, p] : dist.categorical_probs()) {
                            values.push_back(v);
                            weights.push_back(p);
                        }
                        ge.emplace(slot, values[pick_weighted(rng, weights)]);
                        break;
                    }
                }
            }
            ++out.entities[ge];
        }
    }
    return out;
}

Observation observe(const GroundState& g, const std::vector<SensorSpec>& sensors, long t,
                    std::mt19937_64& rng) {
    Observation obs;
    obs.t = t;
    for (const auto& sensor : sensors) {
        if (sensor.kind == SensorSpec::Kind::presence) {
            long occ = 0;
            for (const auto& [entity, mult] : g.entities) {
                auto it = entity.find(sensor.slot);
                if (it != entity.end() && it->second == sensor.value) occ += mult;
            }
            bool reading = occ >= 1;
            const double flip =
                (reading ? sensor.false_negative : sensor.false_positive).to_double();
            if (flip > 0 && uniform01(rng) < flip) reading = !reading;
            obs.readings.emplace(sensor.id, Reading::of(reading));
        } else {
            std::vector<Value> ids;
            for (const auto& [entity, mult] : g.entities) {
                auto loc = entity.find(sensor.slot);
                if (loc == entity.end() || !(loc->second == sensor.value)) continue;
                auto idit = entity.find(sensor.id_slot);
                if (idit != entity.end()) {
                    for (long i = 0; i < mult; ++i) ids.push_back(idit->second);
                }
            }
            obs.readings.emplace(sensor.id, Reading::of(std::move(ids)));
        }
    }
    return obs;
}

}  // namespace

Trace sample_trace(const Scenario& scenario, std::uint64_t seed, long horizon) {
    std::mt19937_64 rng(seed);
    Trace trace;
    trace.scenario = scenario.name;
    trace.seed = seed;
    trace.horizon = horizon;

    std::vector<Rational> weights;
    for (const auto& [w, cs] : scenario.initial) weights.push_back(w);
    const auto& chosen = scenario.initial[pick_weighted(rng, weights)];
    GroundState state = sample_ground(chosen.second.state, rng);
    trace.truth.push_back(state);

    for (long t = 0; t < horizon; ++t) {
        if (t > 0) {
            state = sample_maximal_step(state, scenario.schemas,
                                        [&rng]() { return uniform01(rng); });
            trace.truth.push_back(state);
        }
        trace.observations.push_back(observe(state, scenario.sensors, t, rng));
    }
    return trace;
}

void write_trace(const Trace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write trace file '" + path + "'");
    ordered_json header;
    header["format_version"] = trace.format_version;
    header["scenario"] = trace.scenario;
    header["seed"] = trace.seed;
    header["horizon"] = trace.horizon;
    out << header.dump() << "\n";
    for (const auto& obs : trace.observations) {
        ordered_json rec;
        rec["t"] = obs.t;
        ordered_json sensors = ordered_json::object();
        for (const auto& [id, reading] : obs.readings) {
            if (reading.presence) {
                sensors[id] = *reading.presence;
            } else {
                ordered_json ids = ordered_json::array();
                for (const auto& v : *reading.ids) ids.push_back(v.symbol);
                sensors[id] = std::move(ids);
            }
        }
        rec["sensors"] = std::move(sensors);
        out << rec.dump() << "\n";
    }
}

void write_truth(const Trace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write truth file '" + path + "'");
    for (std::size_t t = 0; t < trace.truth.size(); ++t) {
        ordered_json rec;
        rec["t"] = t;
        ordered_json entities = ordered_json::array();
        for (const auto& [entity, mult] : trace.truth[t].entities) {
            ordered_json ej;
            ej["count"] = mult;
            ordered_json slots = ordered_json::object();
            for (const auto& [slot, v] : entity) slots[slot] = v.symbol;
            ej["slots"] = std::move(slots);
            entities.push_back(std::move(ej));
        }
        rec["entities"] = std::move(entities);
        out << rec.dump() << "\n";
    }
}

Trace read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open trace file '" + path + "'");
    Trace trace;
    std::string line;
    bool header = true;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const std::exception& e) {
            throw ParseError("trace line " + std::to_string(lineno) + ": " + e.what());
        }
        if (header) {
            header = false;
            trace.format_version = rec.value("format_version", 1);
            trace.scenario = rec.value("scenario", "");
            trace.seed = rec.value("seed", 0ULL);
            trace.horizon = rec.value("horizon", 0L);
            if (trace.format_version != 1) {
                throw ParseError("trace: unsupported format_version");
            }
            continue;
        }
        Observation obs;
        obs.t = rec.at("t").get<long>();
        for (const auto& [id, r] : rec.at("sensors").items()) {
            if (r.is_boolean()) {
                obs.readings.emplace(id, Reading::of(r.get<bool>()));
            } else if (r.is_array()) {
                std::vector<Value> ids;
                for (const auto& v : r) ids.emplace_back(v.get<std::string>());
                obs.readings.emplace(id, Reading::of(std::move(ids)));
            } else {
                throw ParseError("trace line " + std::to_string(lineno) +
                                 ": reading must be bool or id array");
            }
        }
        trace.observations.push_back(std::move(obs));
    }
    if (header) throw ParseError("trace file '" + path + "' is empty");
    return trace;
}

}  // namespace lifted
