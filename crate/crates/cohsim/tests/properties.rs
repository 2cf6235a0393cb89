//! Randomized structural properties: rank invariance under row operations,
//! text-format round trips, and composition laws.

use cohsim::f2::{AffineMapF2, BitMatrix, BitVec};
use cohsim::pauli::PauliString;
use cohsim::stab::StabilizerTableau;
use proptest::prelude::*;

fn arb_matrix() -> impl Strategy<Value = BitMatrix> {
    (1usize..12, 1usize..24).prop_flat_map(|(rows, cols)| {
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), cols), rows)
            .prop_map(move |bits| {
                let rows: Vec<BitVec> =
                    bits.iter().map(|r| BitVec::from_bools(r)).collect();
                BitMatrix::from_rows(&rows)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rank_is_invariant_under_row_additions(
        m in arb_matrix(),
        ops in proptest::collection::vec((any::<u16>(), any::<u16>()), 0..24),
    ) {
        let rank = m.rank();
        prop_assert!(rank <= m.rows().min(m.cols()));
        let mut scrambled = m.clone();
        for (a, b) in ops {
            let src = a as usize % scrambled.rows();
            let dst = b as usize % scrambled.rows();
            if src != dst {
                scrambled.row_add(src, dst);
            }
        }
        prop_assert_eq!(scrambled.rank(), rank);
    }

    #[test]
    fn elimination_preserves_row_space(m in arb_matrix()) {
        let order: Vec<usize> = (0..m.cols()).collect();
        let (reduced, log) = m.gaussian_eliminate(&order);
        prop_assert_eq!(reduced.rank(), m.rank());
        // Every original row stays in the reduced row space.
        for i in 0..m.rows() {
            prop_assert!(reduced.contains_in_row_space(&m.row_bits(i)));
        }
        // And the log replays.
        let mut replay = m.clone();
        for op in log {
            replay.apply_row_op(op);
        }
        prop_assert_eq!(replay, reduced);
    }

    #[test]
    fn pauli_text_round_trip(sign in any::<bool>(), sites in proptest::collection::vec(0u8..4, 1..20)) {
        let mut text = String::from(if sign { "-" } else { "+" });
        for s in &sites {
            text.push(['I', 'X', 'Y', 'Z'][*s as usize]);
        }
        let parsed: PauliString = text.parse().unwrap();
        prop_assert_eq!(parsed.to_string(), text);
    }

    #[test]
    fn affine_compose_is_associative(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 6;
        let mut maps = Vec::new();
        for _ in 0..3 {
            let mut f = AffineMapF2::identity(n);
            for _ in 0..8 {
                if rng.gen_bool(0.2) {
                    f.erase_bit(rng.gen_range(0..n));
                } else {
                    let src = rng.gen_range(0..n);
                    let mut dst = rng.gen_range(0..n);
                    while dst == src {
                        dst = rng.gen_range(0..n);
                    }
                    f.add_bit_into(src, dst);
                }
            }
            maps.push(f);
        }
        let left = maps[0].compose(&maps[1]).unwrap().compose(&maps[2]).unwrap();
        let right = maps[0].compose(&maps[1].compose(&maps[2]).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }
}

#[test]
fn snapshot_round_trip_on_scrambled_states() {
    use cohsim::pauli::{Axis, Gate};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let len = rng.gen_range(1..12);
        let mut state = StabilizerTableau::product(
            &(0..len)
                .map(|_| (Axis::sample(&mut rng), rng.gen()))
                .collect::<Vec<_>>(),
        );
        for _ in 0..len {
            if rng.gen_bool(0.3) {
                state
                    .dephase(&PauliString::single(
                        len,
                        rng.gen_range(0..len),
                        Axis::sample(&mut rng),
                    ))
                    .unwrap();
            }
            if len > 1 {
                let c = rng.gen_range(0..len);
                let mut t = rng.gen_range(0..len);
                while t == c {
                    t = rng.gen_range(0..len);
                }
                state.apply_gate(Gate::Cnot { control: c, target: t }).unwrap();
            }
        }
        let text = state.write_snapshot();
        assert_eq!(StabilizerTableau::parse_snapshot(&text).unwrap(), state);
    }
}
