//! Band variety membership via identity checking.
//!
//! An identity is a pair of words over variables `x y z u v`. A band
//! satisfies it when every assignment of elements to variables (not
//! necessarily distinct) evaluates both sides to the same element. The
//! classical varieties checked by [`variety_profile`] are, with their
//! defining identities:
//!
//! | flag | identity      | class                |
//! |------|---------------|----------------------|
//! | LZ   | `xy = x`      | left zero            |
//! | RZ   | `xy = y`      | right zero           |
//! | RB   | `xyx = x`     | rectangular          |
//! | SL   | `xy = yx`     | semilattices         |
//! | LN   | `xyz = xzy`   | left normal          |
//! | RN   | `xyz = yxz`   | right normal         |
//! | N    | `xyzx = xzyx` | normal               |
//! | LG   | `xyx = xy`    | left regular         |
//! | RG   | `xyx = yx`    | right regular        |
//! | G    | `zxzyz = zxyz`| regular              |

use std::fmt;

use thiserror::Error;

use crate::band::FiniteBand;
use crate::exec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VarietyError {
    #[error("identity must contain exactly one '='")]
    MissingEquals,
    #[error("identity side is empty")]
    EmptySide,
    #[error("invalid variable {0:?}; use letters from \"xyzuv\"")]
    InvalidVariable(char),
    #[error("identities with more than {max} distinct variables are not supported (got {got})")]
    TooManyVariables { max: usize, got: usize },
}

pub const VARIABLE_LETTERS: [char; 5] = ['x', 'y', 'z', 'u', 'v'];

/// A band identity `lhs = rhs` over at most five variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Identity {
    lhs: Vec<u8>,
    rhs: Vec<u8>,
    vars: usize,
}

impl Identity {
    /// Parse a textual identity such as `"xyzx=xzyx"`.
    ///
    /// Variables are the letters `x y z u v`; the variable count is the
    /// number of distinct letters used.
    pub fn parse(text: &str) -> Result<Self, VarietyError> {
        let mut parts = text.split('=');
        let (lhs, rhs) = match (parts.next(), parts.next(), parts.next()) {
            (Some(l), Some(r), None) => (l.trim(), r.trim()),
            _ => return Err(VarietyError::MissingEquals),
        };
        let side = |s: &str| -> Result<Vec<u8>, VarietyError> {
            if s.is_empty() {
                return Err(VarietyError::EmptySide);
            }
            s.chars()
                .map(|c| {
                    VARIABLE_LETTERS
                        .iter()
                        .position(|&v| v == c)
                        .map(|i| i as u8)
                        .ok_or(VarietyError::InvalidVariable(c))
                })
                .collect()
        };
        let lhs = side(lhs)?;
        let rhs = side(rhs)?;
        let vars = lhs
            .iter()
            .chain(rhs.iter())
            .map(|&v| v as usize + 1)
            .max()
            .unwrap_or(0);
        if vars > VARIABLE_LETTERS.len() {
            return Err(VarietyError::TooManyVariables { max: VARIABLE_LETTERS.len(), got: vars });
        }
        Ok(Identity { lhs, rhs, vars })
    }

    /// Number of variables quantified over (highest letter used).
    pub fn variables(&self) -> usize {
        self.vars
    }

    fn eval(&self, band: &FiniteBand, assignment: &[usize], word: &[u8]) -> usize {
        let mut acc = assignment[word[0] as usize];
        for &v in &word[1..] {
            acc = band.mul(acc, assignment[v as usize]);
        }
        acc
    }

    /// Does the identity hold under one specific assignment?
    pub fn holds_under(&self, band: &FiniteBand, assignment: &[usize]) -> bool {
        self.eval(band, assignment, &self.lhs) == self.eval(band, assignment, &self.rhs)
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |w: &[u8]| w.iter().map(|&v| VARIABLE_LETTERS[v as usize]).collect::<String>();
        write!(f, "{}={}", side(&self.lhs), side(&self.rhs))
    }
}

/// Check an identity by enumerating all `n^k` assignments with early exit.
///
/// Assignments are split on the first variable, which is the axis the
/// parallel path fans out over.
pub fn satisfies_identity(band: &FiniteBand, identity: &Identity) -> bool {
    let n = band.order();
    let k = identity.variables();
    if k == 0 {
        return true;
    }
    let total_rest = n.pow((k - 1) as u32);
    !exec::any_index(n, |first| {
        let mut assignment = vec![0usize; k];
        assignment[0] = first;
        (0..total_rest).any(|mut code| {
            for slot in assignment[1..].iter_mut() {
                *slot = code % n;
                code /= n;
            }
            !identity.holds_under(band, &assignment)
        })
    })
}

/// One flag of the variety profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarietyFlag {
    Trivial,
    LeftZero,
    RightZero,
    Rectangular,
    Semilattice,
    LeftNormal,
    RightNormal,
    Normal,
    LeftRegular,
    RightRegular,
    Regular,
}

impl VarietyFlag {
    pub const ALL: [VarietyFlag; 11] = [
        VarietyFlag::Trivial,
        VarietyFlag::LeftZero,
        VarietyFlag::RightZero,
        VarietyFlag::Rectangular,
        VarietyFlag::Semilattice,
        VarietyFlag::LeftNormal,
        VarietyFlag::RightNormal,
        VarietyFlag::Normal,
        VarietyFlag::LeftRegular,
        VarietyFlag::RightRegular,
        VarietyFlag::Regular,
    ];

    /// Defining identity of the variety.
    pub fn identity_text(self) -> &'static str {
        match self {
            VarietyFlag::Trivial => "x=y",
            VarietyFlag::LeftZero => "xy=x",
            VarietyFlag::RightZero => "xy=y",
            VarietyFlag::Rectangular => "xyx=x",
            VarietyFlag::Semilattice => "xy=yx",
            VarietyFlag::LeftNormal => "xyz=xzy",
            VarietyFlag::RightNormal => "xyz=yxz",
            VarietyFlag::Normal => "xyzx=xzyx",
            VarietyFlag::LeftRegular => "xyx=xy",
            VarietyFlag::RightRegular => "xyx=yx",
            VarietyFlag::Regular => "zxzyz=zxyz",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            VarietyFlag::Trivial => "T",
            VarietyFlag::LeftZero => "LZ",
            VarietyFlag::RightZero => "RZ",
            VarietyFlag::Rectangular => "RB",
            VarietyFlag::Semilattice => "SL",
            VarietyFlag::LeftNormal => "LN",
            VarietyFlag::RightNormal => "RN",
            VarietyFlag::Normal => "N",
            VarietyFlag::LeftRegular => "LG",
            VarietyFlag::RightRegular => "RG",
            VarietyFlag::Regular => "G",
        }
    }

    pub fn identity(self) -> Identity {
        Identity::parse(self.identity_text()).expect("built-in identities parse")
    }
}

/// Covering edges of the inclusion lattice on the varieties above: `(a, b)`
/// means variety `a` is contained in variety `b`, so membership in `a`
/// implies membership in `b`.
pub const LATTICE_EDGES: [(VarietyFlag, VarietyFlag); 17] = [
    (VarietyFlag::Trivial, VarietyFlag::LeftZero),
    (VarietyFlag::Trivial, VarietyFlag::RightZero),
    (VarietyFlag::Trivial, VarietyFlag::Semilattice),
    (VarietyFlag::LeftZero, VarietyFlag::Rectangular),
    (VarietyFlag::RightZero, VarietyFlag::Rectangular),
    (VarietyFlag::LeftZero, VarietyFlag::LeftNormal),
    (VarietyFlag::RightZero, VarietyFlag::RightNormal),
    (VarietyFlag::Semilattice, VarietyFlag::LeftNormal),
    (VarietyFlag::Semilattice, VarietyFlag::RightNormal),
    (VarietyFlag::Rectangular, VarietyFlag::Normal),
    (VarietyFlag::LeftNormal, VarietyFlag::Normal),
    (VarietyFlag::RightNormal, VarietyFlag::Normal),
    (VarietyFlag::LeftNormal, VarietyFlag::LeftRegular),
    (VarietyFlag::RightNormal, VarietyFlag::RightRegular),
    (VarietyFlag::Normal, VarietyFlag::Regular),
    (VarietyFlag::LeftRegular, VarietyFlag::Regular),
    (VarietyFlag::RightRegular, VarietyFlag::Regular),
];

/// Membership flags of one band in the varieties of [`VarietyFlag::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarietyProfile {
    flags: [bool; 11],
}

impl VarietyProfile {
    pub fn holds(&self, flag: VarietyFlag) -> bool {
        self.flags[VarietyFlag::ALL.iter().position(|&f| f == flag).unwrap()]
    }

    /// Flags that hold, in canonical order.
    pub fn members(&self) -> Vec<VarietyFlag> {
        VarietyFlag::ALL.iter().copied().filter(|&f| self.holds(f)).collect()
    }

    /// Verify every lattice inclusion on this profile.
    pub fn implications_hold(&self) -> bool {
        LATTICE_EDGES.iter().all(|&(small, big)| !self.holds(small) || self.holds(big))
    }
}

/// Evaluate every variety flag on a band.
///
/// The inclusion implications of the lattice are asserted on the result; a
/// violation would mean the identity checker itself is broken.
pub fn variety_profile(band: &FiniteBand) -> VarietyProfile {
    let mut flags = [false; 11];
    for (i, flag) in VarietyFlag::ALL.iter().enumerate() {
        flags[i] = satisfies_identity(band, &flag.identity());
    }
    let profile = VarietyProfile { flags };
    assert!(
        profile.implications_hold(),
        "variety lattice inclusion violated on {band:?}: {:?}",
        profile.members()
    );
    profile
}
