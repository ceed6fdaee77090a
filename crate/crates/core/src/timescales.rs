//! Which process sets the transition time: coherent tunnelling (`T_Q`),
//! tunnelling interrupted by decoherence (`T_Q²/T_c`) or thermal activation
//! over the barrier (`T_A`).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimescaleInput {
    pub t_q: f64,
    pub t_c: f64,
    pub t_a: f64,
}

impl TimescaleInput {
    pub fn new(t_q: f64, t_c: f64, t_a: f64) -> Result<Self> {
        let inp = TimescaleInput { t_q, t_c, t_a };
        inp.validate()?;
        Ok(inp)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("t_q", self.t_q), ("t_c", self.t_c), ("t_a", self.t_a)] {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Domain(alloc::format!("{name} must be positive and finite, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Quantum,
    DecoherenceLimited,
    Thermal,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Quantum => "quantum",
            Regime::DecoherenceLimited => "decoherence_limited",
            Regime::Thermal => "thermal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimescaleVerdict {
    pub effective_time: f64,
    pub regime: Regime,
}

/// Tunnelling time with decoherence: `T_Q` while `T_Q ≤ T_c`, `T_Q²/T_c`
/// beyond. The two branches meet at `T_Q = T_c`.
pub fn hybrid_time(t_q: f64, t_c: f64) -> f64 {
    if t_q <= t_c {
        t_q
    } else {
        t_q * t_q / t_c
    }
}

/// The shorter of the tunnelling route and thermal activation.
pub fn effective_time(inp: &TimescaleInput) -> Result<TimescaleVerdict> {
    inp.validate()?;
    let hybrid = hybrid_time(inp.t_q, inp.t_c);
    let verdict = if inp.t_a < hybrid {
        TimescaleVerdict { effective_time: inp.t_a, regime: Regime::Thermal }
    } else if inp.t_q <= inp.t_c {
        TimescaleVerdict { effective_time: hybrid, regime: Regime::Quantum }
    } else {
        TimescaleVerdict { effective_time: hybrid, regime: Regime::DecoherenceLimited }
    };
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(t_q: f64, t_c: f64, t_a: f64) -> TimescaleVerdict {
        effective_time(&TimescaleInput::new(t_q, t_c, t_a).unwrap()).unwrap()
    }

    #[test]
    fn rule_table() {
        assert_eq!(verdict(10.0, 1000.0, 1e9), TimescaleVerdict { effective_time: 10.0, regime: Regime::Quantum });
        assert_eq!(
            verdict(100.0, 1.0, 1e9),
            TimescaleVerdict { effective_time: 10000.0, regime: Regime::DecoherenceLimited }
        );
        assert_eq!(verdict(100.0, 1000.0, 5.0), TimescaleVerdict { effective_time: 5.0, regime: Regime::Thermal });
    }

    #[test]
    fn continuous_at_the_crossover() {
        let t_c = 37.5;
        let at = verdict(t_c, t_c, 1e12).effective_time;
        let above = verdict(t_c * (1.0 + 1e-14), t_c, 1e12).effective_time;
        assert_eq!(at, t_c);
        assert!((above - at).abs() <= 1e-12 * t_c);
    }

    #[test]
    fn rejects_bad_input() {
        for (q, c, a) in [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, f64::NAN), (1.0, 1.0, f64::INFINITY)] {
            assert!(matches!(TimescaleInput::new(q, c, a), Err(Error::Domain(_))));
            let raw = TimescaleInput { t_q: q, t_c: c, t_a: a };
            assert!(effective_time(&raw).is_err());
        }
    }
}
