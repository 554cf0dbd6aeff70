use crate::netsim::{Network, PlayerId, Transcript};
use crate::rng::{SimRng, Streams};
use crate::verdict::Verdict;

/// One protocol run: the message fabric plus every party's randomness.
#[derive(Debug)]
pub struct Session {
    pub net: Network,
    pub streams: Streams,
}

impl Session {
    pub fn new(scenario: &str, seed: u64) -> Self {
        let transcript = Transcript::new(format!("{scenario}-{seed:016x}"), scenario, seed);
        Self {
            net: Network::new(transcript),
            streams: Streams::new(seed),
        }
    }

    pub fn rng(&mut self, p: PlayerId) -> &mut SimRng {
        self.streams.party(p)
    }

    pub fn env(&mut self) -> &mut SimRng {
        self.streams.env()
    }

    pub fn finish(self, verdict: &Verdict) -> Transcript {
        let mut t = self.net.into_transcript();
        t.verdict = Some(verdict.clone());
        t
    }
}
