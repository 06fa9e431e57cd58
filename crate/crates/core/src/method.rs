//! Named procedures and their tuning parameters, dispatched uniformly.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};
use crate::level::{parse_rational, Level, Rational};
use crate::procedures::{asl, aslc, bh, sl, slc, slg, RejectionResult, StoreyConfig};
use crate::pvalues::PValueVector;
use crate::subsampling::{
    aslc_plus, multi_subsample, recommended_subsample_size, slc_plus, BaseProcedure, SubsampleSpec,
    DEFAULT_REPLICATES, DEFAULT_RHO, DEFAULT_S_MIN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Bh,
    Sl,
    Slc,
    Asl,
    Aslc,
    Slg,
    SlcPlus,
    AslcPlus,
    SlcPlusPlus,
    AslcPlusPlus,
    SlcPlusPlusHalf,
    AslcPlusPlusHalf,
}

impl Method {
    pub const ALL: [Method; 12] = [
        Method::Bh,
        Method::Sl,
        Method::Slc,
        Method::Asl,
        Method::Aslc,
        Method::Slg,
        Method::SlcPlus,
        Method::AslcPlus,
        Method::SlcPlusPlus,
        Method::AslcPlusPlus,
        Method::SlcPlusPlusHalf,
        Method::AslcPlusPlusHalf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bh => "bh",
            Method::Sl => "sl",
            Method::Slc => "slc",
            Method::Asl => "asl",
            Method::Aslc => "aslc",
            Method::Slg => "slg",
            Method::SlcPlus => "slc+",
            Method::AslcPlus => "aslc+",
            Method::SlcPlusPlus => "slc++",
            Method::AslcPlusPlus => "aslc++",
            Method::SlcPlusPlusHalf => "slc++/2",
            Method::AslcPlusPlusHalf => "aslc++/2",
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(
            self,
            Method::Asl
                | Method::Aslc
                | Method::AslcPlus
                | Method::AslcPlusPlus
                | Method::AslcPlusPlusHalf
        )
    }

    pub fn is_subsampled(self) -> bool {
        matches!(
            self,
            Method::SlcPlus
                | Method::AslcPlus
                | Method::SlcPlusPlus
                | Method::AslcPlusPlus
                | Method::SlcPlusPlusHalf
                | Method::AslcPlusPlusHalf
        )
    }

    pub fn is_multi(self) -> bool {
        matches!(
            self,
            Method::SlcPlusPlus
                | Method::AslcPlusPlus
                | Method::SlcPlusPlusHalf
                | Method::AslcPlusPlusHalf
        )
    }

    pub fn is_halved(self) -> bool {
        matches!(self, Method::SlcPlusPlusHalf | Method::AslcPlusPlusHalf)
    }

    /// The `/2` counterpart of a multi-subsample method.
    pub fn halved(self) -> Option<Method> {
        match self {
            Method::SlcPlusPlus | Method::SlcPlusPlusHalf => Some(Method::SlcPlusPlusHalf),
            Method::AslcPlusPlus | Method::AslcPlusPlusHalf => Some(Method::AslcPlusPlusHalf),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// A method with all of its tuning parameters. The level is supplied per call.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureSpec {
    pub method: Method,
    /// Storey parameter; `None` uses `⌊(n+1)/2⌋ - 1`.
    pub s0: Option<usize>,
    /// Fixed subsample size; `None` applies the `ρ`/`s_min` rule.
    pub subsample_size: Option<usize>,
    pub rho: Rational,
    pub s_min: usize,
    pub replicates: usize,
    pub gamma: Rational,
}

impl ProcedureSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            s0: None,
            subsample_size: None,
            rho: Rational::new(DEFAULT_RHO.0, DEFAULT_RHO.1),
            s_min: DEFAULT_S_MIN,
            replicates: DEFAULT_REPLICATES,
            gamma: Rational::new(1, 2),
        }
    }

    pub fn with_s_min(mut self, s_min: usize) -> Self {
        self.s_min = s_min;
        self
    }

    pub fn with_subsample_size(mut self, size: usize) -> Self {
        self.subsample_size = Some(size);
        self
    }

    pub fn with_s0(mut self, s0: usize) -> Self {
        self.s0 = Some(s0);
        self
    }

    pub fn with_replicates(mut self, b: usize) -> Self {
        self.replicates = b;
        self
    }

    pub fn with_gamma(mut self, gamma: Rational) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn storey(&self, n: usize) -> StoreyConfig {
        self.s0
            .map_or_else(|| StoreyConfig::default_for(n), |s0| StoreyConfig { s0 })
    }

    pub fn subsample_size_for(&self, n: usize, m: usize, alpha: Level) -> usize {
        self.subsample_size
            .unwrap_or_else(|| recommended_subsample_size(n, m, alpha, self.rho, self.s_min))
    }

    /// Checks parameters that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("B must be >= 1".into()));
        }
        if self.gamma <= Rational::from_integer(0) || self.gamma > Rational::from_integer(1) {
            return Err(Error::Config(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.rho <= Rational::from_integer(0) {
            return Err(Error::Config(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        Ok(())
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        pv: &PValueVector,
        alpha: Level,
        rng: &mut R,
    ) -> Result<RejectionResult> {
        let n = pv.n();
        let m = pv.m();
        let storey = self.storey(n);
        let mut multi = |base| -> Result<RejectionResult> {
            let spec = SubsampleSpec::new(
                self.subsample_size_for(n, m, alpha),
                self.replicates,
                self.gamma,
                self.method.is_halved(),
            );
            Ok(multi_subsample(pv, alpha, &spec, base, rng)?.result)
        };
        match self.method {
            Method::Bh => Ok(bh(pv, alpha)),
            Method::Sl => Ok(sl(pv, alpha)),
            Method::Slc => Ok(slc(pv, alpha)),
            Method::Slg => Ok(slg(pv, alpha)),
            Method::Asl => asl(pv, alpha, storey),
            Method::Aslc => aslc(pv, alpha, storey),
            Method::SlcPlus => slc_plus(pv, alpha, self.subsample_size_for(n, m, alpha), rng),
            Method::AslcPlus => {
                aslc_plus(pv, alpha, storey, self.subsample_size_for(n, m, alpha), rng)
            }
            Method::SlcPlusPlus | Method::SlcPlusPlusHalf => multi(BaseProcedure::Slc),
            Method::AslcPlusPlus | Method::AslcPlusPlusHalf => multi(BaseProcedure::Aslc(storey)),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcedureFields {
    method: String,
    #[serde(default)]
    s0: Option<usize>,
    #[serde(default, alias = "subsample-size")]
    subsample_size: Option<usize>,
    #[serde(default)]
    rho: Option<serde_json::Value>,
    #[serde(default, alias = "s-min")]
    s_min: Option<usize>,
    #[serde(default, rename = "B", alias = "b")]
    replicates: Option<usize>,
    #[serde(default)]
    gamma: Option<serde_json::Value>,
    #[serde(default)]
    halve: bool,
}

fn rational_field(name: &str, value: &serde_json::Value) -> Result<Rational> {
    let text = match value {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Number(n) => n.to_string(),
        other => {
            return Err(Error::Config(format!(
                "{name}: expected a number, got {other}"
            )))
        }
    };
    parse_rational(&text).map_err(|e| Error::Config(format!("{name}: {e}")))
}

impl TryFrom<ProcedureFields> for ProcedureSpec {
    type Error = Error;

    fn try_from(fields: ProcedureFields) -> Result<Self> {
        let mut method: Method = fields.method.parse()?;
        if fields.halve {
            method = method
                .halved()
                .ok_or_else(|| Error::Config(format!("method {method} has no halved variant")))?;
        }
        let mut spec = ProcedureSpec::new(method);
        spec.s0 = fields.s0;
        spec.subsample_size = fields.subsample_size;
        if let Some(rho) = &fields.rho {
            spec.rho = rational_field("rho", rho)?;
        }
        if let Some(s_min) = fields.s_min {
            spec.s_min = s_min;
        }
        if let Some(b) = fields.replicates {
            spec.replicates = b;
        }
        if let Some(gamma) = &fields.gamma {
            spec.gamma = rational_field("gamma", gamma)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl<'de> Deserialize<'de> for ProcedureSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(String),
            Full(ProcedureFields),
        }
        let spec = match Repr::deserialize(deserializer)? {
            Repr::Name(name) => name.parse().map(ProcedureSpec::new),
            Repr::Full(fields) => ProcedureSpec::try_from(fields),
        };
        spec.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("SLC+".parse::<Method>().unwrap(), Method::SlcPlus);
        assert!(matches!(
            "slx".parse::<Method>(),
            Err(Error::UnknownMethod(_))
        ));
    }

    #[test]
    fn deserialize_forms() {
        let specs: Vec<ProcedureSpec> = serde_json::from_str(
            r#"["slc", {"method": "slc++", "halve": true, "B": 7, "gamma": 0.25, "s_min": 20}]"#,
        )
        .unwrap();
        assert_eq!(specs[0], ProcedureSpec::new(Method::Slc));
        assert_eq!(specs[1].method, Method::SlcPlusPlusHalf);
        assert_eq!(specs[1].replicates, 7);
        assert_eq!(specs[1].gamma, Rational::new(1, 4));
        assert_eq!(specs[1].s_min, 20);
        assert!(serde_json::from_str::<ProcedureSpec>(r#""slx""#).is_err());
        assert!(
            serde_json::from_str::<ProcedureSpec>(r#"{"method": "sl", "halve": true}"#).is_err()
        );
        assert!(serde_json::from_str::<ProcedureSpec>(r#"{"method": "slc++", "B": 0}"#).is_err());
    }
}
