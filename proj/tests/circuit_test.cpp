#include "magic_meter/circuit.hpp"

#include <numbers>

#include "gtest/gtest.h"

#include "magic_meter/generators.hpp"

using namespace magic_meter;

namespace {

Circuit two_qubit(std::vector<Gate> gates) {
    Circuit c;
    c.n_qubits = 2;
    c.gates = std::move(gates);
    return c;
}

std::string violation(const Circuit& c) {
    try {
        validate(c);
    } catch (const CircuitError& e) {
        return e.reason();
    }
    return "";
}

}  // namespace

TEST(validate, accepts_minimal_circuit) {
    EXPECT_NO_THROW(validate(two_qubit({Gate::cnot(0, 1)})));
}

TEST(validate, rejects_duplicate_cnot_qubits) {
    EXPECT_EQ(violation(two_qubit({Gate::cnot(0, 0)})), "duplicate qubits");
}

TEST(validate, rejects_out_of_range_index) {
    Circuit c;
    c.n_qubits = 3;
    c.gates = {Gate::rx(0, 0.1), Gate::rx(5, 0.2)};
    try {
        validate(c);
        FAIL();
    } catch (const CircuitError& e) {
        EXPECT_EQ(e.gate_index(), 1u);
        EXPECT_EQ(e.reason(), "index out of range");
    }
}

TEST(validate, rejects_angle_mismatch) {
    Gate cnot_with_angle = Gate::cnot(0, 1);
    cnot_with_angle.angle = 1.0;
    EXPECT_EQ(violation(two_qubit({cnot_with_angle})), "unexpected angle");
    Gate rx_without = Gate::rx(0, 1.0);
    rx_without.angle.reset();
    EXPECT_EQ(violation(two_qubit({rx_without})), "missing angle");
}

TEST(validate, qubit_range_is_configurable) {
    Circuit c;
    c.n_qubits = 1;
    EXPECT_THROW(validate(c), std::invalid_argument);
    EXPECT_NO_THROW(validate(c, {1, 14}));
}

TEST(serialize, empty_circuit_layout) {
    Circuit c;
    c.n_qubits = 2;
    EXPECT_EQ(serialize(c), R"({"v":1,"n":2,"family":"RQC","seed":0,"g":0,"gates":[]})");
}

TEST(serialize, gate_layout) {
    Circuit c = two_qubit({Gate::cnot(1, 0), Gate::rz(1, 0.5)});
    c.meta.gate_count = 2;
    c.meta.seed = 18446744073709551615ULL;
    EXPECT_EQ(serialize(c),
              R"({"v":1,"n":2,"family":"RQC","seed":18446744073709551615,"g":2,)"
              R"("gates":[{"k":"cnot","q":[1,0]},{"k":"rz","q":[1],"a":0.5}]})");
}

TEST(serialize, tim_layout) {
    Circuit c = gen_tim(2, 1, 0.25, 0.125);
    c.meta.seed = 9;
    const auto line = serialize(c);
    EXPECT_EQ(line.substr(0, 72),
              R"({"v":1,"n":2,"family":"TIM","seed":9,"t":1,"theta":0.25,"phi":0.125,"gat)");
}

TEST(serialize, rotation_round_trips_exactly) {
    const Circuit c = two_qubit({Gate::rx(0, std::numbers::pi)});
    const Circuit back = deserialize(serialize(c));
    EXPECT_EQ(back, c);
    EXPECT_EQ(*back.gates[0].angle, std::numbers::pi);
}

TEST(serialize, generated_tim_lines_are_fixed_points) {
    TimConfig cfg;
    cfg.n_qubits = 6;
    cfg.count = 1000;
    cfg.master_seed = 11;
    for (const auto& c : gen_dataset(cfg)) {
        const auto line = serialize(c);
        const auto back = deserialize(line);
        ASSERT_EQ(back, c);
        ASSERT_EQ(serialize(back), line);
    }
}

TEST(deserialize, errors) {
    EXPECT_THROW(deserialize("{not json"), std::invalid_argument);
    EXPECT_THROW(deserialize(R"({"v":2,"n":2,"family":"RQC","seed":0,"g":0,"gates":[]})"),
                 std::invalid_argument);
    EXPECT_THROW(
        deserialize(R"({"v":1,"n":2,"family":"RQC","seed":0,"g":1,"gates":[{"k":"h","q":[0]}]})"),
        std::invalid_argument);
    EXPECT_THROW(
        deserialize(R"({"v":1,"n":2,"family":"RQC","seed":0,"g":1,"gates":[{"k":"cnot","q":[1,1]}]})"),
        CircuitError);
    EXPECT_THROW(deserialize(R"({"v":1,"n":2,"family":"RQC","seed":0,"g":0})"),
                 std::invalid_argument);
}

TEST(deserialize, labeled_lines) {
    LabeledCircuit lc;
    lc.circuit = two_qubit({Gate::ry(1, 2.5)});
    lc.sre = 0.125;
    lc.label_ms = 0.5;
    const auto line = serialize(lc);
    EXPECT_NE(line.find(R"("sre":0.125,"label_ms":0.5})"), std::string::npos);
    const auto back = deserialize_labeled(line);
    EXPECT_EQ(back.circuit, lc.circuit);
    EXPECT_EQ(back.sre, 0.125);
    // A labeled line is still a valid circuit line.
    EXPECT_EQ(deserialize(line), lc.circuit);
}
