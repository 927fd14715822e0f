//! Static queuing schemes: the injection-time mapping from a flow to a
//! virtual channel. The VC chosen here is kept end-to-end.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqsScheme {
    /// Everything shares VC 0.
    OneQ,
    /// Destination modulo the VC count.
    Dbbm,
    /// Contiguous destination bands.
    Bbq,
    /// Source-group/destination-group rotation.
    Flow2sl,
}

impl SqsScheme {
    pub const ALL: [SqsScheme; 4] = [Self::OneQ, Self::Dbbm, Self::Bbq, Self::Flow2sl];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OneQ => "one_q",
            Self::Dbbm => "dbbm",
            Self::Bbq => "bbq",
            Self::Flow2sl => "flow2sl",
        }
    }
}

impl fmt::Display for SqsScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SqsScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown queuing scheme `{s}` (expected one_q|dbbm|bbq|flow2sl)"))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SqsError {
    #[error("endpoint {id} out of range for {endpoints} endpoints")]
    EndpointOutOfRange { id: usize, endpoints: usize },
    #[error("VC count must be at least 1")]
    NoVcs,
}

/// Maps the flow `src -> dst` to a VC in `[0, vcs)`.
pub fn map_vc(
    scheme: SqsScheme,
    src: usize,
    dst: usize,
    endpoints: usize,
    vcs: usize,
) -> Result<usize, SqsError> {
    if vcs == 0 {
        return Err(SqsError::NoVcs);
    }
    for id in [src, dst] {
        if id >= endpoints {
            return Err(SqsError::EndpointOutOfRange { id, endpoints });
        }
    }
    Ok(match scheme {
        SqsScheme::OneQ => 0,
        SqsScheme::Dbbm => dst % vcs,
        SqsScheme::Bbq => dst * vcs / endpoints,
        SqsScheme::Flow2sl => {
            let group = endpoints.div_ceil(vcs);
            let (src_group, dst_group) = (src / group, dst / group);
            (dst_group + vcs - src_group) % vcs
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(map_vc(SqsScheme::Dbbm, 0, 7, 16, 4), Ok(3));
        assert_eq!(map_vc(SqsScheme::Bbq, 0, 15, 16, 4), Ok(3));
        assert_eq!(map_vc(SqsScheme::Bbq, 0, 3, 16, 4), Ok(0));
        assert_eq!(map_vc(SqsScheme::Flow2sl, 0, 15, 16, 4), Ok(3));
        for (s, d) in [(0, 1), (5, 9), (15, 2)] {
            assert_eq!(map_vc(SqsScheme::OneQ, s, d, 16, 4), Ok(0));
        }
    }

    #[test]
    fn dbbm_balances_sixteen_destinations() {
        let mut per_vc = [0; 4];
        for dst in 0..16 {
            per_vc[map_vc(SqsScheme::Dbbm, 0, dst, 16, 4).unwrap()] += 1;
        }
        assert_eq!(per_vc, [4, 4, 4, 4]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(
            map_vc(SqsScheme::Dbbm, 16, 0, 16, 4),
            Err(SqsError::EndpointOutOfRange { id: 16, endpoints: 16 })
        );
        assert_eq!(map_vc(SqsScheme::Bbq, 0, 1, 16, 0), Err(SqsError::NoVcs));
    }

    #[test]
    fn total_and_in_range() {
        for n in 1..=256 {
            for vcs in 1..=8 {
                for scheme in SqsScheme::ALL {
                    for src in 0..n {
                        for dst in 0..n {
                            assert!(map_vc(scheme, src, dst, n, vcs).unwrap() < vcs);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn destination_schemes_ignore_source() {
        for scheme in [SqsScheme::Dbbm, SqsScheme::Bbq] {
            for dst in 0..32 {
                let vc = map_vc(scheme, 0, dst, 32, 4).unwrap();
                assert!((0..32).all(|src| map_vc(scheme, src, dst, 32, 4).unwrap() == vc));
            }
        }
    }

    #[test]
    fn balance_when_vcs_divide_endpoints() {
        for (n, vcs) in [(16, 4), (64, 8), (12, 3), (8, 8)] {
            for scheme in [SqsScheme::Dbbm, SqsScheme::Bbq] {
                let mut per_vc = vec![0; vcs];
                for dst in 0..n {
                    per_vc[map_vc(scheme, 0, dst, n, vcs).unwrap()] += 1;
                }
                assert!(per_vc.iter().all(|&c| c == n / vcs), "{scheme} n={n} vcs={vcs}");
            }
            // Each source group spreads the destination groups over every VC.
            let group = n / vcs;
            for src_group in 0..vcs {
                let mut seen = vec![false; vcs];
                for dst_group in 0..vcs {
                    let vc = map_vc(SqsScheme::Flow2sl, src_group * group, dst_group * group, n, vcs)
                        .unwrap();
                    assert!(!seen[vc]);
                    seen[vc] = true;
                }
            }
        }
    }

    #[test]
    fn parses_config_names() {
        for s in SqsScheme::ALL {
            assert_eq!(s.as_str().parse::<SqsScheme>(), Ok(s));
        }
        assert!("fifo".parse::<SqsScheme>().is_err());
    }
}
