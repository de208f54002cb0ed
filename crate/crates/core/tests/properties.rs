use proptest::prelude::*;
use rill_core::dynamics::ConservationCheck;
use rill_core::stats::{FloodAccumulator, FloodConfig, Histogram, SwitchAccumulator};
use rill_core::{init, GridGeometry, SimState};

fn grid() -> impl Strategy<Value = (usize, usize)> {
    (2usize..12, 1usize..7).prop_map(|(half, depth)| (2 * half, depth))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_conserve_water((w, d) in grid(), eta in 0.01f64..20.0, steps in 0u64..40, seed: u64) {
        let g = GridGeometry::new(w, d).unwrap();
        let mut s = init::<u64>(g, eta, 1, seed).unwrap();
        let mut check = ConservationCheck::new();
        s.run(steps, &mut [&mut check]).unwrap();
        prop_assert!(check.ok(), "{:?}", check.violations);
        prop_assert_eq!(check.steps_checked, steps);
    }

    #[test]
    fn loads_stay_in_the_cone_range((w, d) in grid(), eta in 0.01f64..20.0, steps in 1u64..40, seed: u64) {
        let g = GridGeometry::new(w, d).unwrap();
        let mut s = init::<u64>(g, eta, 1, seed).unwrap();
        let mut bad = Vec::new();
        let mut obs = |st: &SimState<u64>| {
            for k in 1..=d {
                let cap = (k * (k + 1) / 2) as u64;
                bad.extend(st.row(st.input(), k).iter().filter(|&&l| l < 1 || l > cap).map(|&l| (st.time(), k, l)));
            }
        };
        s.run(steps, &mut [&mut obs]).unwrap();
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn probabilities_are_strictly_inside((w, d) in grid(), eta in 0.001f64..50.0, steps in 0u64..40, seed: u64) {
        let g = GridGeometry::new(w, d).unwrap();
        let mut s = init::<u64>(g, eta, 1, seed).unwrap();
        s.run(steps, &mut []).unwrap();
        for i in 0..g.node_count() {
            let p = s.left_probability_at(i);
            prop_assert!(p > 0.0 && p < 1.0, "node {} p = {}", i, p);
        }
    }

    #[test]
    fn sediment_bookkeeping((w, d) in grid(), eta in 0.01f64..20.0, steps in 1u64..30, seed: u64) {
        let g = GridGeometry::new(w, d).unwrap();
        let mut s = init::<u64>(g, eta, 1, seed).unwrap();
        let mut previous = (vec![0u64; g.node_count()], vec![0u64; g.node_count()]);
        let mut ok = true;
        let mut obs = |st: &SimState<u64>| {
            for i in 0..g.node_count() {
                let sent = st.dispatched()[i];
                let left = st.went_left()[i];
                ok &= st.t_total()[i] == previous.1[i] + sent;
                ok &= st.t_left()[i] == previous.0[i] + if left { sent } else { 0 };
                ok &= st.t_left()[i] <= st.t_total()[i];
            }
            previous = (st.t_left().to_vec(), st.t_total().to_vec());
        };
        s.run(steps, &mut [&mut obs]).unwrap();
        prop_assert!(ok);
    }

    #[test]
    fn histogram_merge_is_associative(xs in prop::collection::vec(-1.0f64..3.0, 0..200), a in 0usize..200, b in 0usize..200) {
        let (a, b) = (a.min(xs.len()), b.min(xs.len()));
        let (a, b) = (a.min(b), a.max(b));
        let fill = |part: &[f64]| {
            let mut h = Histogram::uniform(0.0, 2.0, 17).unwrap();
            part.iter().for_each(|&x| h.add(x));
            h
        };
        let (h1, h2, h3) = (fill(&xs[..a]), fill(&xs[a..b]), fill(&xs[b..]));
        let mut left = h1.clone();
        left.merge(&h2).unwrap();
        left.merge(&h3).unwrap();
        let mut tail = h2.clone();
        tail.merge(&h3).unwrap();
        let mut right = h1;
        right.merge(&tail).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(&left, &fill(&xs));
    }

    #[test]
    fn switch_segments_concatenate(
        history in prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 0..40),
        a in 0usize..40,
        b in 0usize..40,
    ) {
        let (a, b) = (a.min(history.len()), b.min(history.len()));
        let (a, b) = (a.min(b), a.max(b));
        let fill = |part: &[Vec<bool>]| {
            let mut acc = SwitchAccumulator::new(6, 6);
            part.iter().for_each(|d| acc.push(d));
            acc
        };
        let (s1, s2, s3) = (fill(&history[..a]), fill(&history[a..b]), fill(&history[b..]));
        let mut left = s1.clone();
        left.merge(&s2).unwrap();
        left.merge(&s3).unwrap();
        let mut tail = s2;
        tail.merge(&s3).unwrap();
        let mut right = s1;
        right.merge(&tail).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(&left, &fill(&history));
    }

    #[test]
    fn flood_counts_merge_associatively(seeds in prop::array::uniform3(any::<u64>()), eta in 0.1f64..5.0) {
        let g = GridGeometry::new(8, 4).unwrap();
        let cfg = FloodConfig { threshold: 1.5, bins: 12, ..FloodConfig::default() };
        let runs: Vec<FloodAccumulator> = seeds
            .iter()
            .map(|&seed| {
                let mut acc = FloodAccumulator::new(8, 4, cfg).unwrap();
                let mut s = init::<u64>(g, eta, 1, seed).unwrap();
                s.run(25, &mut [&mut acc]).unwrap();
                acc
            })
            .collect();
        let mut left = runs[0].clone();
        left.merge(&runs[1]).unwrap();
        left.merge(&runs[2]).unwrap();
        let mut tail = runs[1].clone();
        tail.merge(&runs[2]).unwrap();
        let mut right = runs[0].clone();
        right.merge(&tail).unwrap();
        prop_assert_eq!(&left.rows, &right.rows);
        prop_assert_eq!(left.checked(), 3 * runs[0].checked());
    }
}
