use proptest::prelude::*;
use scarid_core::hilbert::{enumerate_basis, hamming, is_valid, BitString, Boundary};

/// Every string of length `len` with no adjacent excitations, by direct filtering.
fn brute_force(len: usize, boundary: Boundary) -> Vec<u64> {
    (0u64..1 << len)
        .filter(|&x| {
            let pairs = if boundary == Boundary::Periodic { len } else { len - 1 };
            (0..pairs).all(|i| !((x >> i) & 1 == 1 && (x >> ((i + 1) % len)) & 1 == 1))
        })
        .collect()
}

#[test]
fn basis_equals_brute_force_filtering() {
    for boundary in [Boundary::Periodic, Boundary::Open] {
        for len in 2..=12 {
            let basis = enumerate_basis(len, boundary).unwrap();
            let got: Vec<u64> = basis.states().iter().map(BitString::bits).collect();
            assert_eq!(got, brute_force(len, boundary), "L={len} {boundary:?}");
        }
    }
}

#[test]
fn sizes_follow_lucas_and_fibonacci_numbers() {
    // periodic sizes are Lucas numbers, open sizes Fibonacci numbers F(L+2)
    let (mut l0, mut l1) = (2usize, 1usize);
    let (mut f0, mut f1) = (1usize, 2usize);
    for len in 1..=20 {
        if len >= 2 {
            assert_eq!(enumerate_basis(len, Boundary::Periodic).unwrap().dim(), l1);
            assert_eq!(enumerate_basis(len, Boundary::Open).unwrap().dim(), f1);
        }
        (l0, l1) = (l1, l0 + l1);
        (f0, f1) = (f1, f0 + f1);
    }
    assert_eq!(enumerate_basis(10, Boundary::Periodic).unwrap().dim(), 123);
}

#[test]
fn index_of_inverts_state() {
    for boundary in [Boundary::Periodic, Boundary::Open] {
        let basis = enumerate_basis(12, boundary).unwrap();
        for (i, s) in basis.states().iter().enumerate() {
            assert_eq!(basis.index_of(s), Some(i));
        }
    }
}

fn bitstring(len: usize) -> impl Strategy<Value = BitString> {
    (0u64..1 << len).prop_map(move |b| BitString::new(b, len).unwrap())
}

proptest! {
    #[test]
    fn hamming_is_a_metric(a in bitstring(12), b in bitstring(12), c in bitstring(12)) {
        let d = |x: &BitString, y: &BitString| hamming(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert_eq!(d(&a, &b) == 0, a == b);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
    }

    #[test]
    fn display_round_trips(a in bitstring(9)) {
        let text = a.to_string();
        prop_assert_eq!(text.len(), 9);
        prop_assert_eq!(text.parse::<BitString>().unwrap(), a);
    }

    #[test]
    fn translation_preserves_validity(a in bitstring(10)) {
        prop_assert_eq!(is_valid(&a, Boundary::Periodic), is_valid(&a.translated(), Boundary::Periodic));
    }
}
