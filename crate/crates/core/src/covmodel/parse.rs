//! Text grammar for model specifications:
//! `family` or `family(key=value, ...)`, e.g. `matern(nu=1, range=0.5, sill=1)`
//! or `wendland1(theta=0.3)`. Family names are case-insensitive.

use std::str::FromStr;

use super::{CovFamily, CovarianceSpec, Taper, TaperFamily};
use crate::error::{Error, Result};

struct Call {
    name: String,
    args: Vec<(String, f64)>,
}

impl Call {
    fn take(&mut self, key: &str) -> Option<f64> {
        let pos = self.args.iter().position(|(k, _)| k == key)?;
        Some(self.args.remove(pos).1)
    }

    fn finish(self) -> Result<()> {
        match self.args.first() {
            None => Ok(()),
            Some((k, _)) => Err(Error::Parse(format!(
                "unknown parameter `{k}` for model `{}`",
                self.name
            ))),
        }
    }
}

fn parse_call(text: &str) -> Result<Call> {
    let text = text.trim();
    let (name, rest) = match text.find('(') {
        Some(i) => {
            let inner = text[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("missing `)` in `{text}`")))?;
            (&text[..i], inner)
        }
        None => (text, ""),
    };
    let name = name.trim().to_ascii_lowercase();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(Error::Parse(format!("bad model name in `{text}`")));
    }
    let mut args = Vec::new();
    for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
        let key = k.trim().to_ascii_lowercase();
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad number `{}` for `{key}`", v.trim())))?;
        if args.iter().any(|(k, _)| *k == key) {
            return Err(Error::Parse(format!("duplicate parameter `{key}`")));
        }
        args.push((key, value));
    }
    Ok(Call { name, args })
}

fn taper_family_by_name(name: &str) -> Option<TaperFamily> {
    Some(match name {
        "spherical" | "sph" => TaperFamily::Spherical,
        "cubic" => TaperFamily::Cubic,
        "penta" => TaperFamily::Penta,
        "bohman" | "bonham" => TaperFamily::Bohman,
        "wendland0" => TaperFamily::Wendland0,
        "wendland1" => TaperFamily::Wendland1,
        "wendland2" => TaperFamily::Wendland2,
        _ => return None,
    })
}

impl FromStr for TaperFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().to_ascii_lowercase();
        taper_family_by_name(&name)
            .ok_or_else(|| Error::Parse(format!("unknown taper family `{}`", s.trim())))
    }
}

impl FromStr for CovarianceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut call = parse_call(s)?;
        let sill = call.take("sill").unwrap_or(1.0);
        let range = call.take("range").unwrap_or(1.0);
        let family = match call.name.as_str() {
            "exponential" | "exp" => CovFamily::Exponential,
            "gaussian" | "gauss" => CovFamily::Gaussian,
            "spherical" | "sph" => CovFamily::Spherical,
            "cubic" => CovFamily::Cubic,
            "penta" => CovFamily::Penta,
            "matern" => CovFamily::Matern {
                nu: call
                    .take("nu")
                    .ok_or_else(|| Error::Parse("matern requires `nu`".into()))?,
            },
            "cauchy" => CovFamily::Cauchy {
                alpha: call
                    .take("alpha")
                    .ok_or_else(|| Error::Parse("cauchy requires `alpha`".into()))?,
            },
            other => return Err(Error::Parse(format!("unknown covariance family `{other}`"))),
        };
        call.finish()?;
        CovarianceSpec::new(family, sill, range)
    }
}

impl FromStr for Taper {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut call = parse_call(s)?;
        let family = taper_family_by_name(&call.name)
            .ok_or_else(|| Error::Parse(format!("unknown taper family `{}`", call.name)))?;
        let theta = call
            .take("theta")
            .ok_or_else(|| Error::Parse(format!("taper `{}` requires `theta`", call.name)))?;
        call.finish()?;
        Taper::new(family, theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_examples() {
        let m: CovarianceSpec = "matern(nu=1, range=0.5, sill=1)".parse().unwrap();
        assert_eq!(m.family(), CovFamily::Matern { nu: 1.0 });
        assert_eq!(m.range(), 0.5);
        let t: Taper = "wendland1(theta=0.3)".parse().unwrap();
        assert_eq!(t.family(), TaperFamily::Wendland1);
        assert_eq!(t.theta(), 0.3);
        let e: CovarianceSpec = "Exponential".parse().unwrap();
        assert_eq!((e.sill(), e.range()), (1.0, 1.0));
        let b: TaperFamily = "Bonham".parse().unwrap();
        assert_eq!(b, TaperFamily::Bohman);
    }

    #[test]
    fn rejects_malformed() {
        assert!("matern(range=1)".parse::<CovarianceSpec>().is_err());
        assert!("exponential(range=1, foo=2)".parse::<CovarianceSpec>().is_err());
        assert!("exponential(range=1".parse::<CovarianceSpec>().is_err());
        assert!("exponential(range=abc)".parse::<CovarianceSpec>().is_err());
        assert!("exponential(range=1, range=2)".parse::<CovarianceSpec>().is_err());
        assert!("wendland1".parse::<Taper>().is_err());
        assert!("triangle(theta=1)".parse::<Taper>().is_err());
        assert!("exponential(range=-1)".parse::<CovarianceSpec>().is_err());
    }
}
