//! Committed-fixture checks: the generator reproduces its golden file
//! byte-for-byte, and every backend reproduces the hand-computed value of
//! the worked instance (see hand_2x2x1_k1.expected.txt).

use gridflow::graph::VolumeDims;
use gridflow::verify::{Backend, SolveOptions};
use gridflow::{gen, io, oracle, verify};

fn fixture(name: &str) -> Vec<u8> {
    let path = format!("{}/tests/fixtures/{}", env!("CARGO_MANIFEST_DIR"), name);
    std::fs::read(path).expect("fixture present")
}

#[test]
fn generator_reproduces_golden_file() {
    let dims = VolumeDims::new(2, 2, 1, 1).unwrap();
    let inst = gen::generate_pogf(dims, 1, 20).unwrap();
    let mut buf = Vec::new();
    io::write_pogf(&mut buf, &inst.topo, &inst.caps).unwrap();
    assert_eq!(buf, fixture("gen_seed1_2x2x1_k1.pogf"));
}

#[test]
fn hand_computed_instance_value_is_5() {
    let inst = match io::read_pogf(&fixture("hand_2x2x1_k1.pogf")) {
        Ok(i) => i,
        Err(e) => panic!("fixture must parse: {}", e),
    };
    assert_eq!(
        oracle::oracle_maxflow(&inst.topo, &inst.caps).unwrap(),
        5,
        "hand-computed augmenting paths carry 3 + 2"
    );
    let opts = SolveOptions {
        segments: 2,
        tiles: (2, 1),
        ..SolveOptions::default()
    };
    for backend in [
        Backend::PrSerial,
        Backend::PrParallel,
        Backend::BkSerial,
        Backend::BkParallel,
    ] {
        let mut caps = inst.caps.clone();
        let flow = verify::run_backend(backend, &inst.topo, &mut caps, &opts).unwrap();
        assert_eq!(flow, 5, "{}", backend.name());
    }
}

#[test]
fn diamond_dimacs_fixture() {
    let text = String::from_utf8(fixture("diamond.dimacs")).unwrap();
    let mut g = io::read_dimacs(&text).unwrap();
    assert_eq!(g.max_flow(), 2);
    let (_, cut) = g.min_cut().unwrap();
    assert_eq!(cut, 2);
}
