//! Nets bundled with the crate and net file lookup.

use std::path::Path;

use super::net::{parse_net, IntuitionNet};
use crate::error::{Error, Result};

/// Environment variable listing extra directories to search for nets.
pub const NET_PATH_VAR: &str = "SHIRE_NET_PATH";

/// `(name, source text)` of every bundled net.
pub const SHIPPED_NETS: &[(&str, &str)] = &[
    ("cartpole", include_str!("../../../../configs/cartpole.net")),
    ("mountaincar", include_str!("../../../../configs/mountaincar.net")),
    ("lander_basic", include_str!("../../../../configs/lander_basic.net")),
    ("lander_antiparallel", include_str!("../../../../configs/lander_antiparallel.net")),
    ("taxi", include_str!("../../../../configs/taxi.net")),
];

pub fn shipped_net(name: &str) -> Option<&'static str> {
    SHIPPED_NETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Name of the bundled net used when none is given for `env`.
pub fn default_net_name(env: &str) -> Option<&'static str> {
    match env {
        "cartpole" => Some("cartpole"),
        "mountaincar" => Some("mountaincar"),
        "lander" => Some("lander_basic"),
        "taxi" => Some("taxi"),
        _ => None,
    }
}

/// A parsed net together with where it came from and its source text.
#[derive(Debug, Clone)]
pub struct LoadedNet {
    pub net: IntuitionNet,
    pub source: String,
    pub text: String,
}

fn read(path: &Path) -> Result<LoadedNet> {
    let text = std::fs::read_to_string(path)?;
    let net = parse_net(&text)?;
    Ok(LoadedNet {
        net,
        source: path.display().to_string(),
        text,
    })
}

/// Resolve a net by file path, then by name in the directories of
/// `SHIRE_NET_PATH`, then among the bundled nets.
pub fn load_net(spec: &str) -> Result<LoadedNet> {
    let direct = Path::new(spec);
    if direct.is_file() {
        return read(direct);
    }
    if let Some(dirs) = std::env::var_os(NET_PATH_VAR) {
        for dir in std::env::split_paths(&dirs) {
            for candidate in [dir.join(spec), dir.join(format!("{spec}.net"))] {
                if candidate.is_file() {
                    return read(&candidate);
                }
            }
        }
    }
    let name = spec.strip_suffix(".net").unwrap_or(spec);
    if let Some(text) = shipped_net(name) {
        return Ok(LoadedNet {
            net: parse_net(text)?,
            source: format!("builtin:{name}"),
            text: text.to_string(),
        });
    }
    let names: Vec<&str> = SHIPPED_NETS.iter().map(|(n, _)| *n).collect();
    Err(Error::Config(format!(
        "net `{spec}` not found as a file, in ${NET_PATH_VAR}, or among bundled nets {names:?}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intuition::Intuition;

    #[test]
    fn bundled_nets_parse_and_bind() {
        let sizes: Vec<usize> = SHIPPED_NETS
            .iter()
            .map(|(name, _)| {
                let loaded = load_net(name).unwrap();
                assert_eq!(loaded.source, format!("builtin:{name}"));
                Intuition::new(loaded.net.clone()).unwrap();
                loaded.net.size()
            })
            .collect();
        assert_eq!(sizes, vec![2, 2, 5, 6, 4]);
    }

    #[test]
    fn unknown_net_is_a_config_error() {
        assert!(matches!(load_net("nosuch"), Err(Error::Config(_))));
    }
}
