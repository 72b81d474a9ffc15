#include <doctest.h>

#include "qnsim/ehi/config.hpp"
#include "qnsim/ehi/ehi.hpp"

using namespace qnsim;
using namespace qnsim::ehi;

TEST_CASE("generic preset exposes uniform gate set and decoherence times") {
    NodeInfo n = generic_preset(3);
    CHECK(n.qubits.size() == 3);
    CHECK(n.num_comm() == 3);
    for (const auto& q : n.qubits) {
        CHECK(q.t1 == doctest::Approx(1e9));
        CHECK(q.t2 == doctest::Approx(1e8));
    }
    for (const char* g : {"init", "rot_x", "rot_y", "rot_z", "x", "y", "z", "h", "meas"}) {
        const GateInfo* gi = n.find_single(g, true);
        REQUIRE(gi != nullptr);
        CHECK(gi->duration == 5000);
    }
    for (const char* g : {"cnot", "cphase"}) {
        const GateInfo* gi = n.find_two(g, true, true);
        REQUIRE(gi != nullptr);
        CHECK(gi->duration == 200000);
    }
    CHECK(n.find_single("bichromatic", true) == nullptr);
    CHECK(n.find_all("rot_x_all") == nullptr);
}

TEST_CASE("color-center preset distinguishes the optical qubit from memories") {
    NodeInfo n = color_center_preset(2);
    REQUIRE(n.qubits.size() == 3);
    CHECK(n.num_comm() == 1);
    CHECK(n.qubits[0].t1 == doctest::Approx(3.6e9));
    CHECK(n.qubits[0].t2 == doctest::Approx(5e8));
    CHECK(n.qubits[1].t1 == doctest::Approx(3.5e10));
    CHECK(n.qubits[1].t2 == doctest::Approx(1e6));
    // rot_z exists only on memory qubits.
    CHECK(n.find_single("rot_z", true) == nullptr);
    REQUIRE(n.find_single("rot_z", false) != nullptr);
    CHECK(n.find_single("rot_z", false)->duration == 1200000);
    CHECK(n.find_single("rot_x", true)->duration == 300);
    CHECK(n.find_single("rot_x", false)->duration == 1200000);
    // Two-qubit gates span the optical/memory divide only.
    REQUIRE(n.find_two("crot_x", true, false) != nullptr);
    CHECK(n.find_two("crot_x", true, false)->duration == 1000000);
    CHECK(n.find_two("crot_x", true, true) == nullptr);
    CHECK(n.find_two("cnot", true, false) == nullptr);
}

TEST_CASE("trapped-ion preset has collective gates and no T1 decay") {
    NodeInfo n = trapped_ion_preset(4);
    CHECK(n.num_comm() == 4);
    CHECK(n.qubits[0].t1 == kInf);
    CHECK(n.qubits[0].t2 == doctest::Approx(8.5e7));
    CHECK(n.find_single("init", true)->duration == 26600);
    CHECK(n.find_single("rot_x", true) == nullptr); // only via rot_x_all
    for (const char* g :
         {"init_all", "meas_all", "rot_x_all", "rot_y_all", "rot_z_all", "bichromatic"}) {
        REQUIRE(n.find_all(g) != nullptr);
        CHECK(n.find_all(g)->duration == 85000000);
    }
}

TEST_CASE("unit modules put communication qubits first and check capacity") {
    NodeInfo nv = color_center_preset(2);
    UnitModule um = derive_unit_module(nv, 1, 2);
    REQUIRE(um.size() == 3);
    CHECK(um.is_comm(0));
    CHECK(!um.is_comm(1));
    CHECK(!um.is_comm(2));
    CHECK_THROWS_AS(derive_unit_module(nv, 2, 0), SetupError);
    CHECK_THROWS_AS(derive_unit_module(nv, 1, 3), SetupError);
    // Generic nodes can serve memory-kind requests from comm qubits.
    NodeInfo gen = generic_preset(2);
    UnitModule um2 = derive_unit_module(gen, 1, 1);
    CHECK(um2.is_comm(0));
    CHECK(um2.is_comm(1)); // fallback keeps the physical kind
}

TEST_CASE("config loader builds nodes, links and latencies") {
    const char* text = R"(
# two-node network
[node.alice]
preset = generic
num_qubits = 2
host_latency = 2000
[node.bob]
preset = nv
num_qubits = 3
t2 = 2e6
[link.alice.bob]
fidelity = 0.85
epr_duration = 1e5
cc = 1e7
[latencies]
internal_signal = 500
)";
    LoadedNetwork net = load_network(KvConfig::parse_string(text, "test"));
    REQUIRE(net.node_order.size() == 2);
    CHECK(net.node_order[0] == "alice");
    CHECK(net.nodes.at("alice").id == 0);
    CHECK(net.nodes.at("bob").id == 1);
    CHECK(net.nodes.at("alice").host_latency == 2000);
    CHECK(net.nodes.at("bob").num_comm() == 1);
    CHECK(net.nodes.at("bob").qubits[1].t2 == doctest::Approx(2e6));
    const LinkInfo* li = net.network.find_link("bob", "alice");
    REQUIRE(li != nullptr);
    CHECK(li->fidelity == doctest::Approx(0.85));
    CHECK(li->epr_duration == 100000);
    CHECK(li->cc_latency == 10000000);
    CHECK(net.internal_signal_latency == 500);
}

TEST_CASE("config parser reports malformed input") {
    CHECK_THROWS_AS(KvConfig::parse_string("[node.x\n", "t"), SetupError);
    CHECK_THROWS_AS(KvConfig::parse_string("justtext\n", "t"), SetupError);
    KvConfig ok = KvConfig::parse_string("a = 1e3\nb = inf\n", "t");
    CHECK(ok.top().get_i64("a", 0) == 1000);
    CHECK(ok.top().get_f64("b", 0) == kInf);
}

TEST_CASE("symbol table resolves duration names") {
    NodeInfo n = generic_preset(2);
    LinkInfo li{1.0, 100000, 10000000};
    SymbolTable s = make_symbols(n, &li);
    CHECK(*s.lookup("T1") == doctest::Approx(1e9));
    CHECK(*s.lookup("T2") == doctest::Approx(1e8));
    CHECK(*s.lookup("CC") == doctest::Approx(1e7));
    CHECK(*s.lookup("epr_duration") == doctest::Approx(1e5));
    CHECK(*s.lookup("host_latency") == doctest::Approx(1000));
    CHECK(!s.lookup("bogus").has_value());
}
