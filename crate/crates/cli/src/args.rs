//! Argument parsing helpers: fortunes, budgets, ε grids.

use boldplay_core::dyadic::DyadicRational;
use boldplay_core::linear_form::LinearForm;
use boldplay_core::qsolver::Budget;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Parses a fortune from text (`"1/2"`, `"1-1*ell"`, `"7/8*ell"`,
/// `"ell"`) or from LinearForm JSON (`{"p_num":…}`); rational
/// coefficients must be dyadic.
pub fn parse_fortune(input: &str) -> Result<LinearForm, String> {
    let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if s.starts_with('{') {
        return serde_json::from_str(&s).map_err(|e| format!("bad fortune JSON: {e}"));
    }
    // split into at most two top-level terms on + or - (not at index 0)
    let mut split_at: Option<(usize, char)> = None;
    for (i, c) in s.char_indices().skip(1) {
        if c == '+' || c == '-' {
            split_at = Some((i, c));
            break;
        }
    }
    let (first, rest) = match split_at {
        Some((i, c)) => (&s[..i], Some((c, &s[i + 1..]))),
        None => (s.as_str(), None),
    };
    let mut form = parse_term(first, false)?;
    if let Some((sign, term)) = rest {
        let t = parse_term(term, sign == '-')?;
        form = form + t;
    }
    Ok(form)
}

fn parse_term(term: &str, negate: bool) -> Result<LinearForm, String> {
    if term.is_empty() {
        return Err("empty term in fortune expression".into());
    }
    let (coeff_text, is_ell) = if term == "ell" {
        ("1", true)
    } else if let Some(prefix) = term.strip_suffix("*ell") {
        (prefix, true)
    } else if term.ends_with("ell") {
        return Err(format!("write the ℓ term as `c*ell` or `ell`, got {term:?}"));
    } else {
        (term, false)
    };
    let mut coeff = parse_dyadic(coeff_text)?;
    if negate {
        coeff = -coeff;
    }
    Ok(if is_ell {
        LinearForm::new(DyadicRational::zero(), coeff)
    } else {
        LinearForm::from_rational_part(coeff)
    })
}

/// Parses `a` or `a/b` where the reduced denominator must be a power of
/// two.
pub fn parse_dyadic(text: &str) -> Result<DyadicRational, String> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (
            n.parse::<BigInt>().map_err(|e| format!("bad numerator {n:?}: {e}"))?,
            d.parse::<BigInt>().map_err(|e| format!("bad denominator {d:?}: {e}"))?,
        ),
        None => {
            // also accept the solver's own rendering a/2^k
            if let Some((n, k)) = text.split_once("/2^") {
                let n = n.parse::<BigInt>().map_err(|e| format!("bad numerator {n:?}: {e}"))?;
                let k = k.parse::<u32>().map_err(|e| format!("bad exponent {k:?}: {e}"))?;
                return Ok(DyadicRational::new(n, k));
            }
            (
                text.parse::<BigInt>()
                    .map_err(|e| format!("bad integer {text:?}: {e}"))?,
                BigInt::one(),
            )
        }
    };
    if den.is_zero() || den.is_negative() {
        return Err(format!("denominator must be positive in {text:?}"));
    }
    let reduced = BigRational::new(num, den);
    let d: &BigUint = reduced.denom().magnitude();
    if d.count_ones() != 1 {
        return Err(format!(
            "{text:?} is not a dyadic rational (denominator {} is not a power of two); \
             express it through the ℓ term, e.g. 7/10 = 1 - 1*ell at ell = 3/10",
            reduced.denom()
        ));
    }
    let exp = d.trailing_zeros().unwrap_or(0) as u32;
    Ok(DyadicRational::new(reduced.numer().clone(), exp))
}

/// Budget triple `depth,states,width` with an exact rational width.
pub fn parse_budget(text: &str) -> Result<Budget, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!(
            "budget must be depth,states,width (e.g. 64,400000,1/1000000000), got {text:?}"
        ));
    }
    let max_depth: u32 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("bad budget depth: {e}"))?;
    let max_states: usize = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad budget states: {e}"))?;
    let target_width: BigRational = parts[2]
        .trim()
        .parse()
        .map_err(|e| format!("bad budget width (use an exact rational like 1/1000000): {e}"))?;
    if !target_width.is_positive() {
        return Err("budget width must be positive".into());
    }
    Ok(Budget::new(max_depth, max_states, target_width))
}

/// ε grid: `kmin..kmax` (unit dyadics 2^-k) or a comma list of exponents.
pub fn parse_epsilon_grid(text: &str) -> Result<Vec<DyadicRational>, String> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|e| format!("bad grid start: {e}"))?;
        let hi: u32 = hi.trim().parse().map_err(|e| format!("bad grid end: {e}"))?;
        if lo == 0 || hi < lo {
            return Err(format!("grid range must be 1 ≤ kmin ≤ kmax, got {text:?}"));
        }
        return Ok((lo..=hi).map(DyadicRational::unit).collect());
    }
    text.split(',')
        .map(|tok| {
            let k: u32 = tok
                .trim()
                .parse()
                .map_err(|e| format!("bad grid exponent {tok:?}: {e}"))?;
            if k == 0 {
                return Err("grid exponents must be at least 1".into());
            }
            Ok(DyadicRational::unit(k))
        })
        .collect()
}
