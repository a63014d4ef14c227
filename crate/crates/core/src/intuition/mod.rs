//! Intuition nets: parsing, inference, state encoders and the hinge loss.

mod encoders;
mod loss;
mod net;
mod parser;
mod shipped;

use std::sync::Arc;

use rand::Rng;
use sha2::{Digest, Sha256};

pub use encoders::{
    pad_bearing, quadrant, steering_error, wrap_angle, CartPoleEncoder, EncoderRegistry, LanderAntiparallelEncoder,
    LanderEncoder, MountainCarEncoder, NodeSchema, StateEncoder, TaxiEncoder, REST_EPS,
};
pub use loss::{agreement_rate, intuition_loss, mismatch_vector, IntuitionTargets, MARGIN};
pub use net::{
    parse_net, AbstractAssignment, ActionMapping, Cpt, IntuitionNet, IntuitionNode, NodeRole, Posterior, TargetMode,
    ROW_SUM_TOL,
};
pub use parser::{parse_raw, Assign, RawCpt, RawMap, RawMapTarget, RawNet, RawNode, RawWeight};
pub use shipped::{default_net_name, load_net, shipped_net, LoadedNet, NET_PATH_VAR, SHIPPED_NETS};

use crate::error::{Error, Result};
use encoders::Binding;

/// A net bound to the encoder that feeds its parent nodes.
#[derive(Debug, Clone)]
pub struct Intuition {
    net: Arc<IntuitionNet>,
    encoder: Arc<dyn StateEncoder>,
    binding: Binding,
    source: Option<String>,
    sha256: Option<String>,
}

impl Intuition {
    /// Bind `net` to the matching builtin encoder.
    pub fn new(net: IntuitionNet) -> Result<Self> {
        let encoder = EncoderRegistry::builtin().resolve(&net)?;
        Self::with_encoder(net, encoder)
    }

    pub fn with_encoder(net: IntuitionNet, encoder: Arc<dyn StateEncoder>) -> Result<Self> {
        let binding = Binding::new(&net, encoder.as_ref())?;
        Ok(Self {
            net: Arc::new(net),
            encoder,
            binding,
            source: None,
            sha256: None,
        })
    }

    /// Bind a loaded net, remembering its origin and the SHA-256 of its text.
    pub fn from_loaded(loaded: &LoadedNet) -> Result<Self> {
        let mut i = Self::new(loaded.net.clone())?;
        i.source = Some(loaded.source.clone());
        i.sha256 = Some(hex::encode(Sha256::digest(loaded.text.as_bytes())));
        Ok(i)
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn source_sha256(&self) -> Option<&str> {
        self.sha256.as_deref()
    }

    pub fn net(&self) -> &IntuitionNet {
        &self.net
    }

    pub fn encoder(&self) -> &dyn StateEncoder {
        self.encoder.as_ref()
    }

    /// Check that this intuition applies to `env`.
    pub fn check_env(&self, env: &str) -> Result<()> {
        if self.net.env() != env {
            return Err(Error::Config(format!(
                "intuition net `{}` is for env `{}`, not `{env}`",
                self.net.name(),
                self.net.env()
            )));
        }
        Ok(())
    }

    /// Intuitive actions and weights for a flat batch of raw observations.
    /// `rng` is only drawn from in sample mode.
    pub fn targets<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        obs_dim: usize,
        mode: TargetMode,
        rng: &mut R,
    ) -> Result<IntuitionTargets> {
        if obs_dim == 0 || obs.len() % obs_dim != 0 {
            return Err(Error::Usage(format!(
                "observation batch of length {} is not a multiple of {obs_dim}",
                obs.len()
            )));
        }
        let n = obs.len() / obs_dim;
        let mut encoded = vec![0; self.encoder.schema().len()];
        let mut parents = vec![0; encoded.len()];
        let mut posterior = vec![0.0; self.net.n_configs()];
        let mut out = IntuitionTargets {
            actions: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
        };
        for o in obs.chunks_exact(obs_dim) {
            self.encoder.encode_into(o, &mut encoded)?;
            self.binding.apply(&encoded, &mut parents);
            self.net.posterior_into(&parents, &mut posterior);
            let (action, config) = self.net.intuitive_action(&posterior, mode, rng);
            out.actions.push(action);
            out.weights.push(self.net.config_weight(config));
        }
        Ok(out)
    }

    /// Posterior for one raw observation.
    pub fn posterior(&self, obs: &[f64]) -> Result<Posterior> {
        let assignment = self.encoder.encode(obs)?;
        self.net.infer_action_posterior(&assignment)
    }
}
