use std::fmt;
use std::str::FromStr;

use crate::corruption::ReverbSource;
use crate::error::{Error, Result};

/// Corruption mix used to train an autoencoder or extend the PLDA list:
/// noise, artificial or real reverberation, or noise combined with either.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mix {
    N,
    AR,
    NAR,
    RR,
    NRR,
}

impl Mix {
    pub const ALL: [Mix; 5] = [Mix::N, Mix::AR, Mix::NAR, Mix::RR, Mix::NRR];

    pub fn has_noise(self) -> bool {
        matches!(self, Mix::N | Mix::NAR | Mix::NRR)
    }

    pub fn reverb(self) -> ReverbSource {
        match self {
            Mix::N => ReverbSource::None,
            Mix::AR | Mix::NAR => ReverbSource::ArtificialPool,
            Mix::RR | Mix::NRR => ReverbSource::RealPool,
        }
    }

    /// Path-safe tag.
    pub fn slug(self) -> &'static str {
        match self {
            Mix::N => "n",
            Mix::AR => "ar",
            Mix::NAR => "n-ar",
            Mix::RR => "rr",
            Mix::NRR => "n-rr",
        }
    }
}

impl fmt::Display for Mix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mix::N => "N",
            Mix::AR => "AR",
            Mix::NAR => "N+AR",
            Mix::RR => "RR",
            Mix::NRR => "N+RR",
        })
    }
}

impl FromStr for Mix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mix::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown mix `{s}`; expected one of N, AR, N+AR, RR, N+RR")))
    }
}

/// One column of the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum System {
    Baseline,
    Ae(Mix),
    Mc(Mix),
    AeMc { ae: Mix, mc: Mix },
}

impl System {
    pub fn ae(self) -> Option<Mix> {
        match self {
            System::Ae(m) | System::AeMc { ae: m, .. } => Some(m),
            _ => None,
        }
    }

    pub fn mc(self) -> Option<Mix> {
        match self {
            System::Mc(m) | System::AeMc { mc: m, .. } => Some(m),
            _ => None,
        }
    }

    /// Feature view the system consumes: raw audio or audio enhanced by one autoencoder.
    pub fn view(self) -> String {
        match self.ae() {
            Some(m) => format!("ae-{}", m.slug()),
            None => "raw".into(),
        }
    }

    pub fn slug(self) -> String {
        match self {
            System::Baseline => "baseline".into(),
            System::Ae(m) => format!("ae-{}", m.slug()),
            System::Mc(m) => format!("mc-{}", m.slug()),
            System::AeMc { ae, mc } => format!("ae-{}_mc-{}", ae.slug(), mc.slug()),
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            System::Baseline => f.write_str("baseline"),
            System::Ae(m) => write!(f, "AE({m})"),
            System::Mc(m) => write!(f, "MC({m})"),
            System::AeMc { ae, mc } if ae == mc => write!(f, "AE+MC({ae})"),
            System::AeMc { ae, mc } => write!(f, "AE({ae})+MC({mc})"),
        }
    }
}

fn inner<'a>(s: &'a str, head: &str) -> Option<&'a str> {
    s.strip_prefix(head)?.strip_prefix('(')?.strip_suffix(')')
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "baseline" {
            return Ok(System::Baseline);
        }
        if let Some(m) = inner(s, "AE+MC") {
            let m = m.parse()?;
            return Ok(System::AeMc { ae: m, mc: m });
        }
        if let Some((a, b)) = s.split_once(")+MC(") {
            if let (Some(a), Some(b)) = (a.strip_prefix("AE("), b.strip_suffix(')')) {
                return Ok(System::AeMc {
                    ae: a.parse()?,
                    mc: b.parse()?,
                });
            }
        }
        if let Some(m) = inner(s, "AE") {
            return Ok(System::Ae(m.parse()?));
        }
        if let Some(m) = inner(s, "MC") {
            return Ok(System::Mc(m.parse()?));
        }
        Err(Error::Config(format!("unknown system `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in ["baseline", "AE(N+RR)", "MC(N)", "AE+MC(N+RR)", "AE(RR)+MC(N+AR)"] {
            assert_eq!(s.parse::<System>().unwrap().to_string(), s);
        }
        assert!("AE(X)".parse::<System>().is_err());
        assert!("ae".parse::<System>().is_err());
    }

    #[test]
    fn mixes() {
        for m in Mix::ALL {
            assert_eq!(m.to_string().parse::<Mix>().unwrap(), m);
        }
        assert!(Mix::NRR.has_noise() && !Mix::RR.has_noise());
        assert_eq!(Mix::NAR.reverb(), ReverbSource::ArtificialPool);
    }
}
