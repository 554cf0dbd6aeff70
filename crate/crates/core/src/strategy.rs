//! Party behaviors.
//!
//! A run assigns one [`Behavior`] to each player. At most one player may
//! deviate during the protocol; [`Behavior::PostTerminationCollusion`] only
//! acts once a session has ended and is exempt from that limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netsim::PlayerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Behavior {
    Honest,
    /// Relay measures every forwarded qubit in a random basis and resends.
    InterceptResendHelen,
    /// Committer prepares round 0 without recording it and tries to open
    /// whichever bit she wants at unveil.
    BindingFlipAlice,
    /// Receiver publishes falsified records in round 0 and complains.
    BaselessComplainerBob,
    /// OT receiver leaves `deferred` positions unmeasured and guesses their
    /// outcomes when asked to open.
    LazyReceiver {
        deferred: usize,
    },
    /// Complains about every subGCOT instance.
    DisruptiveBob,
    /// Answers OT calls with `corrupted` positions off its committed
    /// codewords.
    CheatingAliceGcot {
        corrupted: usize,
    },
    /// Pools views with the partner once the session has terminated.
    PostTerminationCollusion(PlayerId),
}

impl Behavior {
    pub fn is_honest(&self) -> bool {
        matches!(
            self,
            Behavior::Honest | Behavior::PostTerminationCollusion(_)
        )
    }

    fn allowed_for(&self, p: PlayerId) -> bool {
        match self {
            Behavior::Honest | Behavior::LazyReceiver { .. } => true,
            Behavior::InterceptResendHelen => p == PlayerId::Helen,
            Behavior::BindingFlipAlice | Behavior::CheatingAliceGcot { .. } => p == PlayerId::Alice,
            Behavior::BaselessComplainerBob | Behavior::DisruptiveBob => p == PlayerId::Bob,
            Behavior::PostTerminationCollusion(partner) => *partner != p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub party: PlayerId,
    pub behavior: Behavior,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyProfile {
    behaviors: [Behavior; 3],
}

impl Default for StrategyProfile {
    fn default() -> Self {
        Self::honest()
    }
}

impl StrategyProfile {
    pub fn honest() -> Self {
        Self {
            behaviors: [Behavior::Honest; 3],
        }
    }

    pub fn from_strategies(strategies: &[Strategy]) -> Result<Self> {
        let mut profile = Self::honest();
        for s in strategies {
            profile.behaviors[s.party.index()] = s.behavior;
        }
        profile.validate()?;
        Ok(profile)
    }

    pub fn with(party: PlayerId, behavior: Behavior) -> Result<Self> {
        Self::from_strategies(&[Strategy { party, behavior }])
    }

    pub fn behavior(&self, p: PlayerId) -> Behavior {
        self.behaviors[p.index()]
    }

    /// The player deviating during the protocol, if any.
    pub fn cheater(&self) -> Option<PlayerId> {
        PlayerId::ALL
            .into_iter()
            .find(|p| !self.behaviors[p.index()].is_honest())
    }

    pub fn validate(&self) -> Result<()> {
        for p in PlayerId::ALL {
            let b = self.behaviors[p.index()];
            if !b.allowed_for(p) {
                return Err(Error::Config(format!("{b:?} cannot be played by {p}")));
            }
        }
        let deviating = PlayerId::ALL
            .iter()
            .filter(|p| !self.behaviors[p.index()].is_honest())
            .count();
        if deviating > 1 {
            return Err(Error::Config(
                "at most one player may deviate during a run".into(),
            ));
        }
        Ok(())
    }
}
