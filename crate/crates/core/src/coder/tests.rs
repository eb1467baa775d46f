use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::codebook::{construct_family, meshalkin_alphabets, MARKER};
use crate::dyadic::ProbabilityVector;
use crate::error::Error;
use crate::matching::{build_mompm, TupleAlphabet};

fn sample(pv: &ProbabilityVector, len: usize, seed: u64) -> Vec<Symbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs = pv.to_f64();
    (0..len)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            let mut acc = 0.0;
            for (s, p) in pv.symbols().iter().zip(&probs) {
                acc += p;
                if u < acc {
                    return *s;
                }
            }
            *pv.symbols().last().unwrap()
        })
        .collect()
}

#[test]
fn one_gap_between_two_markers() {
    let w = Window::new(0, vec![0, 0, 3, 1, 0, 0]);
    let g = segment_gaps(&w, 1, 1);
    let complete: Vec<_> = g.levels[0].iter().filter(|g| g.complete).collect();
    assert_eq!(complete.len(), 1);
    assert_eq!((complete[0].first, complete[0].last, complete[0].len), (2, 3, 2));
    assert_eq!(complete[0].members(&w).collect::<Vec<_>>(), vec![2, 3]);
    assert_eq!(complete[0].span(1, 1), 3);
}

#[test]
fn all_markers_have_no_gaps() {
    let w = Window::new(-5, vec![0; 11]);
    let g = segment_gaps(&w, 2, 3);
    assert!(g.levels.iter().all(|l| l.is_empty()));
}

#[test]
fn short_run_separates_low_levels_only() {
    // n = 2: a run of 7 is a 1-marker (≥4) but not a 2-marker (≥8)
    let mut s = vec![0; 8];
    s.extend([5, 6]);
    s.extend([0; 7]);
    s.extend([7]);
    s.extend([0; 8]);
    let w = Window::new(0, s);
    let g = segment_gaps(&w, 2, 2);
    let ones: Vec<_> = g.levels[0].iter().filter(|g| g.complete).map(|g| (g.first, g.last, g.len)).collect();
    assert_eq!(ones, vec![(8, 9, 2), (17, 17, 1)]);
    let twos: Vec<_> = g.levels[1].iter().filter(|g| g.complete).map(|g| (g.first, g.last, g.len)).collect();
    assert_eq!(twos, vec![(8, 17, 3)]);
}

#[test]
fn gaps_with_unknowns_are_incomplete() {
    let w = Window::new(0, vec![0, 0, 3, UNKNOWN, 0, 0, 2, 0, 0]);
    let g = segment_gaps(&w, 1, 1);
    let flags: Vec<_> = g.levels[0].iter().map(|g| (g.first, g.complete)).collect();
    assert_eq!(flags, vec![(2, false), (6, true)]);
}

#[test]
fn meshalkin_single_pair() {
    // α_1 α_4 = 0 | 110 → 00 | 11 = β_1 β_4
    let w = Window::new(0, vec![1, 4]);
    let e = meshalkin_encode(&w).unwrap();
    assert_eq!(e.output.symbols, vec![1, 4]);
    assert_eq!(e.status[0], Status::Determined { step: 1, radius: 1 });
    let d = meshalkin_decode(&e.output).unwrap();
    assert_eq!(d.output.symbols, vec![1, 4]);
}

#[test]
fn meshalkin_nested() {
    // α_1 α_1 α_5 α_2: inner pair (1,2), outer pair (0,3)
    let w = Window::new(10, vec![1, 1, 5, 2]);
    let e = meshalkin_encode(&w).unwrap();
    assert!(e.status.iter().all(Status::is_determined));
    assert_eq!(e.status[0].radius(), Some(3));
    assert_eq!(e.status[1].radius(), Some(1));
    let d = meshalkin_decode(&e.output).unwrap();
    assert_eq!(d.output.symbols, w.symbols);
    assert_eq!(e.tuples.len(), 2);
}

#[test]
fn meshalkin_unbalanced_windows_are_censored() {
    let e = meshalkin_encode(&Window::new(0, vec![1; 9])).unwrap();
    assert_eq!(e.determined_count(), 0);
    let e = meshalkin_encode(&Window::new(0, vec![5; 9])).unwrap();
    assert_eq!(e.determined_count(), 0);
    let d = meshalkin_decode(&Window::new(0, vec![4; 9])).unwrap();
    assert_eq!(d.determined_count(), 0);
}

#[test]
fn meshalkin_rejects_foreign_symbols() {
    assert!(matches!(
        meshalkin_encode(&Window::new(-3, vec![1, 6])),
        Err(Error::InvalidSymbol { position: -2, symbol: 6 })
    ));
    assert!(meshalkin_decode(&Window::new(0, vec![5])).is_err());
    assert!(meshalkin_decode(&Window::new(0, vec![0])).is_err());
}

#[test]
fn meshalkin_matches_inductive_description() {
    let r = meshalkin_alphabets().r();
    for seed in 0..20 {
        let w = Window::new(0, sample(&r, 400, seed));
        let e = meshalkin_encode(&w).unwrap();
        let oracle = meshalkin_inductive(&w).unwrap();
        for (i, o) in oracle.iter().enumerate() {
            match o {
                Some((y, step)) => {
                    assert_eq!(e.output.symbols[i], *y, "seed {seed} pos {i}");
                    assert_eq!(e.status[i], Status::Determined { step: *step, radius: u64::from(*step) });
                }
                None => assert_eq!(e.status[i], Status::Censored, "seed {seed} pos {i}"),
            }
        }
    }
}

#[test]
fn meshalkin_round_trip_and_locality() {
    let r = meshalkin_alphabets().r();
    let long = Window::new(-2000, sample(&r, 4001, 7));
    let big = meshalkin_encode(&long).unwrap();
    let back = meshalkin_decode(&big.output).unwrap();
    let rt = compare_round_trip(&long, &big, &back);
    assert!(rt.mismatches.is_empty());
    assert!(rt.mutually_determined > 3000);
    // a subwindow decides a subset of positions, identically
    let sub = Window::new(-500, long.symbols[1500..2501].to_vec());
    let small = meshalkin_encode(&sub).unwrap();
    assert!(small.mismatches(&big).is_empty());
    for (i, s) in small.status.iter().enumerate() {
        if let Some(rad) = s.radius() {
            let pos = sub.position(i);
            assert_eq!(big.status_at(pos).unwrap().radius(), Some(rad));
        }
    }
}

#[test]
fn meshalkin_interior_is_almost_all_determined() {
    // P(N > k) ≈ 0.78/√k, so ≥ 99% needs a margin of several thousand symbols:
    // positions within 10³ of the center, in windows of half-width 10⁵
    let r = meshalkin_alphabets().r();
    let (mut decided, mut total) = (0, 0);
    for seed in 0..20 {
        let w = Window::new(-100_000, sample(&r, 200_001, 100 + seed));
        let e = meshalkin_encode(&w).unwrap();
        let back = meshalkin_decode(&e.output).unwrap();
        let rt = compare_round_trip(&w, &e, &back);
        assert!(rt.mismatches.is_empty());
        for pos in -1000..=1000 {
            total += 1;
            decided +=
                usize::from(e.status_at(pos).unwrap().is_determined() && back.status_at(pos).unwrap().is_determined());
        }
    }
    assert!(decided as f64 >= 0.99 * total as f64, "{decided} of {total}");
}

#[test]
fn phi_markers_map_to_markers() {
    let fam = construct_family(1).unwrap();
    let w = Window::new(0, sample(&fam.p, 500, 3));
    let e = phi_encode(&fam, &w).unwrap();
    for (i, s) in w.symbols.iter().enumerate() {
        if *s == MARKER {
            assert_eq!(e.output.symbols[i], MARKER);
            assert_eq!(e.status[i], Status::Determined { step: 0, radius: 0 });
        } else if e.status[i].is_determined() {
            assert_ne!(e.output.symbols[i], MARKER);
            assert!(fam.q.prob_of(e.output.symbols[i]).is_some());
        }
    }
}

#[test]
fn phi_pairs_follow_the_first_matching() {
    // n = 1: a lone pair between two 1-markers is coded by ψ_1 or left pending
    let fam = construct_family(1).unwrap();
    let c = TupleAlphabet::base(&fam.r).unwrap();
    let d = TupleAlphabet::base(&fam.s).unwrap();
    let m = build_mompm(&c, &d);
    let ex = m.explicit.as_ref().unwrap();
    let total = (c.len() * c.len()) as u64;
    for id in 0..total {
        let x = ex.flatten_source(id);
        let w = Window::new(0, vec![0, 0, x[0], x[1], 0, 0]);
        let e = phi_encode(&fam, &w).unwrap();
        match ex.image(id) {
            Some(y) => {
                assert_eq!(e.output.symbols[2..4], ex.flatten_target(y)[..]);
                assert_eq!(e.status[2], Status::Determined { step: 1, radius: 3 });
                assert_eq!(e.tuples.len(), 1);
            }
            None => assert_eq!(e.determined_count(), 4),
        }
    }
}

#[test]
fn phi_rejects_symbols_outside_the_alphabet() {
    let fam = construct_family(1).unwrap();
    let bad = fam.p.len() as Symbol + 3;
    assert!(matches!(
        phi_encode(&fam, &Window::new(5, vec![0, 1, bad])),
        Err(Error::InvalidSymbol { position: 7, .. })
    ));
}

fn round_trip(n: u32, half: usize, seeds: std::ops::Range<u64>) {
    let fam = construct_family(n).unwrap();
    let mut determined = 0;
    for seed in seeds {
        let w = Window::new(-(half as i64), sample(&fam.p, 2 * half + 1, seed));
        let e = phi_encode(&fam, &w).unwrap();
        let d = phi_decode(&fam, &e.output).unwrap();
        let rt = compare_round_trip(&w, &e, &d);
        assert!(rt.mismatches.is_empty(), "n={n} seed={seed}: {:?}", &rt.mismatches[..rt.mismatches.len().min(5)]);
        // decoding never resolves a position the encoder left open
        for (es, ds) in e.status.iter().zip(&d.status) {
            assert!(es.is_determined() || !ds.is_determined());
        }
        determined += rt.mutually_determined;
    }
    assert!(determined > 0);
}

#[test]
fn phi_round_trip_n1() {
    round_trip(1, 3000, 0..6);
}

#[test]
fn phi_round_trip_n2() {
    round_trip(2, 20_000, 0..3);
}

#[test]
fn phi_is_local() {
    // outputs decided inside a subwindow agree with the full window, and the radius
    // certificate says how much of the input they depended on
    let fam = construct_family(1).unwrap();
    let full = Window::new(-5000, sample(&fam.p, 10_001, 11));
    let big = phi_encode(&fam, &full).unwrap();
    for (lo, hi) in [(-300i64, 300i64), (-1000, 50), (2000, 4000)] {
        let sub = Window::new(lo, full.symbols[(lo + 5000) as usize..=(hi + 5000) as usize].to_vec());
        let small = phi_encode(&fam, &sub).unwrap();
        assert!(small.mismatches(&big).is_empty());
        for (i, s) in small.status.iter().enumerate() {
            let pos = sub.position(i);
            match s.radius() {
                Some(rad) => {
                    // the certificate is a symmetric bound, so it may overhang one side
                    assert_eq!(big.status_at(pos).unwrap().radius(), Some(rad));
                }
                // anything the full window decided within reach of the subwindow must be decided here
                None => {
                    if let Some(rad) = big.status_at(pos).unwrap().radius() {
                        assert!(pos - (rad as i64) < lo || pos + rad as i64 > hi, "pos {pos}");
                    }
                }
            }
        }
    }
}

#[test]
fn phi_perturbation_stays_outside_radius() {
    let fam = construct_family(1).unwrap();
    let mut symbols = sample(&fam.p, 4001, 21);
    let w = Window::new(-2000, symbols.clone());
    let before = phi_encode(&fam, &w).unwrap();
    // change one position to a different non-marker symbol
    let target = 2000 + 700;
    symbols[target] = if symbols[target] == 1 { 2 } else { 1 };
    let after = phi_encode(&fam, &Window::new(-2000, symbols)).unwrap();
    let changed = w.position(target);
    for (i, s) in before.status.iter().enumerate() {
        if let Some(rad) = s.radius() {
            let pos = w.position(i);
            if (pos - changed).unsigned_abs() > rad {
                assert_eq!(after.output.symbols[i], before.output.symbols[i], "pos {pos}");
                assert_eq!(after.status[i], *s);
            }
        }
    }
}

#[test]
fn phi_commutes_with_shifts() {
    let fam = construct_family(2).unwrap();
    let symbols = sample(&fam.p, 3001, 5);
    let a = phi_encode(&fam, &Window::new(0, symbols.clone())).unwrap();
    let b = phi_encode(&fam, &Window::new(-777, symbols)).unwrap();
    assert_eq!(a.output.symbols, b.output.symbols);
    assert_eq!(a.status, b.status);
}

#[test]
fn status_serializes_with_tag() {
    let s = serde_json::to_string(&Status::Determined { step: 2, radius: 9 }).unwrap();
    assert_eq!(s, r#"{"status":"determined","step":2,"radius":9}"#);
    assert_eq!(serde_json::to_string(&Status::Censored).unwrap(), r#"{"status":"censored"}"#);
}
