//! Monotone adversary structures over small player sets, and feasibility
//! tests for robust multiparty computation with classical oblivious
//! transfer and with a quantum channel.
//!
//! Subsets are bitmasks over the player list. A structure is stored as the
//! antichain of its maximal sets; membership follows monotone closure.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netsim::{PlayerId, Transcript};
use crate::verdict::Outcome;

pub type Mask = u16;

pub const MAX_PLAYERS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerSet {
    names: Vec<String>,
}

impl PlayerSet {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::EmptyInput("player set"));
        }
        if names.len() > MAX_PLAYERS {
            return Err(Error::Config(format!("at most {MAX_PLAYERS} players")));
        }
        let names: Vec<String> = names
            .iter()
            .map(|n| n.as_ref().trim().to_string())
            .collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::Config("empty player name".into()));
            }
            if names[..i].iter().any(|m| m.eq_ignore_ascii_case(n)) {
                return Err(Error::Config(format!("duplicate player {n}")));
            }
        }
        Ok(Self { names })
    }

    pub fn three_party() -> Self {
        Self::new(&PlayerId::ALL.map(|p| p.name())).expect("valid")
    }

    /// Comma-separated names.
    pub fn parse(s: &str) -> Result<Self> {
        let names: Vec<&str> = s
            .split(',')
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .collect();
        Self::new(&names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn full(&self) -> Mask {
        ((1u32 << self.len()) - 1) as Mask
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name.trim()))
            .ok_or_else(|| Error::UnknownPlayer(name.trim().to_string()))
    }

    pub fn mask_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Mask> {
        names
            .iter()
            .try_fold(0, |m, n| Ok(m | (1 << self.index_of(n.as_ref())?)))
    }

    pub fn names_of(&self, mask: Mask) -> Vec<String> {
        (0..self.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| self.names[i].clone())
            .collect()
    }

    pub fn format(&self, mask: Mask) -> String {
        format!("{{{}}}", self.names_of(mask).join(","))
    }
}

fn is_subset(a: Mask, b: Mask) -> bool {
    a & !b == 0
}

/// Drops duplicates and sets contained in others; sorts the rest.
fn antichain(mut sets: Vec<Mask>) -> Vec<Mask> {
    sets.sort_unstable();
    sets.dedup();
    let keep: Vec<Mask> = sets
        .iter()
        .copied()
        .filter(|&s| !sets.iter().any(|&t| t != s && is_subset(s, t)))
        .collect();
    keep
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryStructure {
    players: PlayerSet,
    maximal: Vec<Mask>,
}

impl AdversaryStructure {
    pub fn new(players: PlayerSet, sets: Vec<Mask>) -> Result<Self> {
        let full = players.full();
        if let Some(s) = sets.iter().find(|&&s| !is_subset(s, full)) {
            return Err(Error::Config(format!("set {s:#b} names unknown players")));
        }
        Ok(Self {
            players,
            maximal: antichain(sets),
        })
    }

    /// Every player alone, the honest-majority structure for three parties.
    pub fn singletons(players: PlayerSet) -> Self {
        let sets = (0..players.len()).map(|i| 1 << i).collect();
        Self::new(players, sets).expect("valid")
    }

    /// Parses `{Alice};{Bob,Helen}`.
    pub fn parse(players: PlayerSet, s: &str) -> Result<Self> {
        let mut sets = Vec::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let inner = part
                .strip_prefix('{')
                .and_then(|p| p.strip_suffix('}'))
                .ok_or_else(|| Error::Config(format!("expected {{...}}, got {part}")))?;
            let names: Vec<&str> = inner
                .split(',')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .collect();
            sets.push(players.mask_of(&names)?);
        }
        Self::new(players, sets)
    }

    pub fn players(&self) -> &PlayerSet {
        &self.players
    }

    pub fn maximal(&self) -> &[Mask] {
        &self.maximal
    }

    pub fn contains(&self, set: Mask) -> bool {
        self.maximal.iter().any(|&m| is_subset(set, m))
    }

    /// Every member of the monotone closure.
    pub fn members(&self) -> Vec<Mask> {
        (0..=self.players.full())
            .filter(|&s| self.contains(s))
            .collect()
    }

    pub fn is_antichain(&self) -> bool {
        self.maximal
            .iter()
            .all(|&s| !self.maximal.iter().any(|&t| t != s && is_subset(s, t)))
    }

    pub fn without(&self, set: Mask) -> Self {
        let sets = self.maximal.iter().copied().filter(|&s| s != set).collect();
        Self::new(self.players.clone(), sets).expect("subset of a valid structure")
    }

    pub fn named_sets(&self) -> Vec<Vec<String>> {
        self.maximal
            .iter()
            .map(|&m| self.players.names_of(m))
            .collect()
    }
}

impl fmt::Display for AdversaryStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .maximal
            .iter()
            .map(|&m| self.players.format(m))
            .collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Two collusions whose union is too large.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverWitness {
    /// The player left out of the cover, for the classical test.
    pub excluded: Option<String>,
    pub sets: [Vec<String>; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub witness: Option<CoverWitness>,
}

fn pairs(sets: &[Mask]) -> impl Iterator<Item = (Mask, Mask)> + '_ {
    sets.iter()
        .enumerate()
        .flat_map(move |(i, &a)| sets[i..].iter().map(move |&b| (a, b)))
}

/// Robust computation from pairwise oblivious transfer and broadcast: no
/// two collusions may cover all players but one, unless there are only two
/// players.
pub fn classical_feasible(a: &AdversaryStructure) -> Feasibility {
    let players = &a.players;
    if players.len() == 2 {
        return Feasibility {
            feasible: true,
            witness: None,
        };
    }
    let full = players.full();
    for (x, y) in pairs(&a.maximal) {
        for i in 0..players.len() {
            let rest = full & !(1 << i);
            if is_subset(rest, x | y) {
                return Feasibility {
                    feasible: false,
                    witness: Some(CoverWitness {
                        excluded: Some(players.names[i].clone()),
                        sets: [players.names_of(x), players.names_of(y)],
                    }),
                };
            }
        }
    }
    Feasibility {
        feasible: true,
        witness: None,
    }
}

/// Robust computation with a quantum channel: no two collusions may cover
/// all players.
pub fn quantum_feasible(a: &AdversaryStructure) -> Feasibility {
    let full = a.players.full();
    for (x, y) in pairs(&a.maximal) {
        if x | y == full {
            return Feasibility {
                feasible: false,
                witness: Some(CoverWitness {
                    excluded: None,
                    sets: [a.players.names_of(x), a.players.names_of(y)],
                }),
            };
        }
    }
    Feasibility {
        feasible: true,
        witness: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostTermination {
    pub structure: AdversaryStructure,
    /// Complements that entered the structure.
    pub added: Vec<Mask>,
}

/// The structure tolerated once the protocol has ended: `a` plus the
/// complement of every maximal set containing `trusted` (complements that
/// leave the trusted player out).
pub fn post_termination_structure(
    a: &AdversaryStructure,
    trusted: &str,
) -> Result<PostTermination> {
    let t = a.players.index_of(trusted)?;
    if !quantum_feasible(a).feasible {
        return Err(Error::Config(
            "post-termination extension needs a quantum-feasible structure".into(),
        ));
    }
    let full = a.players.full();
    let added: Vec<Mask> = antichain(
        a.maximal
            .iter()
            .filter(|&&m| m >> t & 1 == 1)
            .map(|&m| full & !m)
            .filter(|&c| c != 0)
            .collect(),
    );
    let mut sets = a.maximal.clone();
    sets.extend(&added);
    let structure = AdversaryStructure::new(a.players.clone(), sets)?;
    let added = added
        .into_iter()
        .filter(|c| structure.maximal.contains(c))
        .collect();
    Ok(PostTermination { structure, added })
}

/// What a finished three-party run claims about its security afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimedStructure {
    pub base: AdversaryStructure,
    /// One extension per player nobody complained about.
    pub extensions: Vec<(String, AdversaryStructure)>,
}

pub fn verdict_structure(transcript: &Transcript) -> Result<ClaimedStructure> {
    if let Some(Outcome::CheaterIdentified(cheater)) =
        transcript.verdict.as_ref().map(|v| &v.outcome)
    {
        let rest: Vec<&str> = PlayerId::ALL
            .into_iter()
            .filter(|p| p != cheater)
            .map(|p| p.name())
            .collect();
        return Ok(ClaimedStructure {
            base: AdversaryStructure::singletons(PlayerSet::new(&rest)?),
            extensions: Vec::new(),
        });
    }
    let complaints = transcript.complaints()?;
    let base = AdversaryStructure::singletons(PlayerSet::three_party());
    let mut extensions = Vec::new();
    for p in PlayerId::ALL {
        if complaints.iter().any(|c| c.accused == p) {
            continue;
        }
        let post = post_termination_structure(&base, p.name())?;
        extensions.push((p.name().to_string(), post.structure));
    }
    Ok(ClaimedStructure { base, extensions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn three(s: &str) -> AdversaryStructure {
        AdversaryStructure::parse(PlayerSet::three_party(), s).unwrap()
    }

    /// Every monotone family over `n` players, as full member lists.
    fn all_monotone(n: usize) -> Vec<Vec<Mask>> {
        let subsets = 1usize << n;
        (0u64..1 << subsets)
            .filter_map(|fam| {
                let members: Vec<Mask> = (0..subsets)
                    .filter(|&s| fam >> s & 1 == 1)
                    .map(|s| s as Mask)
                    .collect();
                let closed = members.iter().all(|&s| {
                    (0..subsets as Mask)
                        .filter(|&t| is_subset(t, s))
                        .all(|t| fam >> t & 1 == 1)
                });
                closed.then_some(members)
            })
            .collect()
    }

    fn brute_classical(n: usize, members: &[Mask]) -> bool {
        if n == 2 {
            return true;
        }
        let full = ((1u32 << n) - 1) as Mask;
        !members.iter().any(|&x| {
            members
                .iter()
                .any(|&y| (0..n).any(|i| is_subset(full & !(1 << i), x | y)))
        })
    }

    fn brute_quantum(n: usize, members: &[Mask]) -> bool {
        let full = ((1u32 << n) - 1) as Mask;
        !members
            .iter()
            .any(|&x| members.iter().any(|&y| x | y == full))
    }

    fn players(n: usize) -> PlayerSet {
        let names: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
        PlayerSet::new(&names).unwrap()
    }

    #[test]
    fn dedekind_counts() {
        let counts: Vec<usize> = (1..=4).map(|n| all_monotone(n).len()).collect();
        assert_eq!(counts, vec![3, 6, 20, 168]);
    }

    #[test]
    fn checkers_match_brute_force() {
        for n in 1..=4 {
            for members in all_monotone(n) {
                let a = AdversaryStructure::new(players(n), members.clone()).unwrap();
                assert_eq!(a.members(), members);
                assert_eq!(
                    classical_feasible(&a).feasible,
                    brute_classical(n, &members)
                );
                assert_eq!(quantum_feasible(&a).feasible, brute_quantum(n, &members));
                if n >= 3 && classical_feasible(&a).feasible {
                    assert!(quantum_feasible(&a).feasible);
                }
            }
        }
    }

    #[test]
    fn three_party_singletons_separate_the_models() {
        let a = three("{Alice};{Bob};{Helen}");
        let c = classical_feasible(&a);
        assert!(!c.feasible);
        assert!(c.witness.is_some());
        assert!(quantum_feasible(&a).feasible);
        let b = three("{Alice,Bob};{Helen}");
        let q = quantum_feasible(&b);
        assert!(!q.feasible);
        assert_eq!(
            q.witness.unwrap().sets,
            [
                vec!["Alice".to_string(), "Bob".into()],
                vec!["Helen".into()]
            ]
        );
    }

    #[test]
    fn two_players_are_classically_feasible() {
        let a = AdversaryStructure::parse(PlayerSet::parse("x,y").unwrap(), "{x};{y}").unwrap();
        assert!(classical_feasible(&a).feasible);
    }

    #[test]
    fn four_singletons_are_feasible() {
        let a = AdversaryStructure::singletons(players(4));
        assert!(classical_feasible(&a).feasible);
    }

    #[test]
    fn extension_with_trusted_helen() {
        let a = three("{Alice};{Bob};{Helen}");
        let post = post_termination_structure(&a, "Helen").unwrap();
        assert_eq!(post.structure.to_string(), "{Alice,Bob};{Helen}");
        assert_eq!(post.added.len(), 1);
        let post = post_termination_structure(&a, "alice").unwrap();
        assert!(post
            .structure
            .contains(a.players().mask_of(&["Bob", "Helen"]).unwrap()));
        assert!(post.structure.is_antichain());
        assert!(post_termination_structure(&a, "Mallory").is_err());
        assert!(post_termination_structure(&three("{Alice,Bob};{Helen}"), "Helen").is_err());
    }

    #[test]
    fn parse_rejects_unknown_players() {
        assert!(AdversaryStructure::parse(PlayerSet::three_party(), "{Alice};{Eve}").is_err());
        assert!(PlayerSet::parse("a,b,A").is_err());
    }

    #[test]
    fn structure_claimed_by_a_run() {
        use crate::session::Session;
        use crate::verdict::Verdict;

        let s = Session::new("t", 1);
        let claim = verdict_structure(&s.finish(&Verdict::accepted(Vec::new()))).unwrap();
        assert_eq!(claim.extensions.len(), 3);

        let mut s = Session::new("t", 2);
        s.net
            .complain(PlayerId::Alice, PlayerId::Bob, "test")
            .unwrap();
        let claim = verdict_structure(&s.finish(&Verdict::accepted(Vec::new()))).unwrap();
        let trusted: Vec<&str> = claim.extensions.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(trusted, vec!["Alice", "Helen"]);

        let s = Session::new("t", 3);
        let v = Verdict::new(Outcome::CheaterIdentified(PlayerId::Bob), Vec::new());
        let claim = verdict_structure(&s.finish(&v)).unwrap();
        assert_eq!(claim.base.to_string(), "{Alice};{Helen}");
        assert!(claim.extensions.is_empty());
    }

    fn arb_structure() -> impl Strategy<Value = AdversaryStructure> {
        (2usize..=6).prop_flat_map(|n| {
            let full = (1u16 << n) - 1;
            prop::collection::vec(0..=full, 0..6)
                .prop_map(move |sets| AdversaryStructure::new(players(n), sets).unwrap())
        })
    }

    proptest! {
        #[test]
        fn constructors_keep_an_antichain(a in arb_structure()) {
            prop_assert!(a.is_antichain());
            for &m in a.maximal() {
                prop_assert!(a.contains(m));
            }
        }

        #[test]
        fn removing_a_set_never_breaks_feasibility(a in arb_structure()) {
            for &m in a.maximal() {
                let b = a.without(m);
                if classical_feasible(&a).feasible {
                    prop_assert!(classical_feasible(&b).feasible);
                }
                if quantum_feasible(&a).feasible {
                    prop_assert!(quantum_feasible(&b).feasible);
                }
            }
        }

        #[test]
        fn extension_keeps_the_trusted_player_out_of_new_sets(a in arb_structure(), t in 0usize..6) {
            let t = t % a.players().len();
            let name = a.players().names()[t].clone();
            if let Ok(post) = post_termination_structure(&a, &name) {
                prop_assert!(post.structure.is_antichain());
                for c in post.added {
                    prop_assert_eq!(c >> t & 1, 0);
                }
                for &m in a.maximal() {
                    prop_assert!(post.structure.contains(m));
                }
            }
        }
    }
}
