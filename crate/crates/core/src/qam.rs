//! Gray-labelled 4-QAM: the first bit of each pair picks the sign of the
//! real part, the second the sign of the imaginary part (0 is positive).

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const BITS_PER_SYMBOL: usize = 2;

fn level(bit: u8) -> f64 {
    if bit == 0 {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    }
}

/// Maps bit pairs to unit-energy 4-QAM symbols.
pub fn qam_map(bits: &[u8]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(BITS_PER_SYMBOL) {
        return Err(Error::Argument(format!("4-QAM needs an even bit count, got {}", bits.len())));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::Argument(format!("bit values must be 0 or 1, got {b}")));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|pair| Complex64::new(level(pair[0]), level(pair[1])))
        .collect())
}

/// Nearest-point hard decision. Zero components (either sign) decide 0.
pub fn qam_demap_hard(symbols: &[Complex64]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len() * 2);
    for s in symbols {
        bits.push(u8::from(s.re < 0.0));
        bits.push(u8::from(s.im < 0.0));
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn labelling_convention() {
        let s = qam_map(&[0, 0, 0, 1, 1, 0, 1, 1]).unwrap();
        let r = FRAC_1_SQRT_2;
        assert_eq!(s[0], Complex64::new(r, r));
        assert_eq!(s[1], Complex64::new(r, -r));
        assert_eq!(s[2], Complex64::new(-r, r));
        assert_eq!(s[3], Complex64::new(-r, -r));
    }

    #[test]
    fn odd_bit_count_rejected() {
        assert!(matches!(qam_map(&[0, 1, 1]), Err(Error::Argument(_))));
        assert!(qam_map(&[0, 2]).is_err());
    }

    #[test]
    fn hard_decisions() {
        assert_eq!(qam_demap_hard(&[Complex64::new(0.9, 0.8)]), vec![0, 0]);
        assert_eq!(qam_demap_hard(&[Complex64::new(0.0, 0.0)]), vec![0, 0]);
        assert_eq!(qam_demap_hard(&[Complex64::new(-0.0, -0.0)]), vec![0, 0]);
        assert_eq!(qam_demap_hard(&[Complex64::new(-3.0, 0.1)]), vec![1, 0]);
    }

    proptest! {
        #[test]
        fn map_demap_round_trip(bits in proptest::collection::vec(0u8..2, 0..64usize)
            .prop_filter("even", |b| b.len() % 2 == 0)) {
            let symbols = qam_map(&bits).unwrap();
            for s in &symbols {
                prop_assert!((s.norm() - 1.0).abs() < 1e-15);
            }
            prop_assert_eq!(qam_demap_hard(&symbols), bits);
        }
    }
}
