use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DramConfig, DramError};

/// Decomposed physical address.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct DramCoord {
    pub channel: u32,
    pub rank: u32,
    pub bank_group: u32,
    pub bank: u32,
    pub row: u32,
    pub column: u32,
    /// Byte offset inside the cacheline.
    pub byte_offset: u32,
}

impl DramCoord {
    /// Bank index inside the channel: rank-major, then bank group, then bank.
    pub fn bank_in_channel(&self, cfg: &DramConfig) -> usize {
        ((self.rank * cfg.bank_groups + self.bank_group) * cfg.banks_per_group + self.bank) as usize
    }

    /// Globally unique bank index (channel-major).
    pub fn global_bank(&self, cfg: &DramConfig) -> usize {
        self.channel as usize * cfg.banks_per_channel() as usize + self.bank_in_channel(cfg)
    }

    pub fn line_aligned(mut self) -> Self {
        self.byte_offset = 0;
        self
    }
}

/// One address field above the cacheline offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapField {
    Channel,
    Rank,
    BankGroup,
    Bank,
    Column,
    Row,
}

impl MapField {
    const ALL: [MapField; 6] = [
        MapField::Channel,
        MapField::Rank,
        MapField::BankGroup,
        MapField::Bank,
        MapField::Column,
        MapField::Row,
    ];

    fn extent(self, cfg: &DramConfig) -> u64 {
        (match self {
            MapField::Channel => cfg.channels,
            MapField::Rank => cfg.ranks,
            MapField::BankGroup => cfg.bank_groups,
            MapField::Bank => cfg.banks_per_group,
            MapField::Column => cfg.columns_per_row,
            MapField::Row => cfg.rows,
        }) as u64
    }

    fn get(self, c: &DramCoord) -> u32 {
        match self {
            MapField::Channel => c.channel,
            MapField::Rank => c.rank,
            MapField::BankGroup => c.bank_group,
            MapField::Bank => c.bank,
            MapField::Column => c.column,
            MapField::Row => c.row,
        }
    }

    fn set(self, c: &mut DramCoord, v: u32) {
        match self {
            MapField::Channel => c.channel = v,
            MapField::Rank => c.rank = v,
            MapField::BankGroup => c.bank_group = v,
            MapField::Bank => c.bank = v,
            MapField::Column => c.column = v,
            MapField::Row => c.row = v,
        }
    }

    fn short(self) -> &'static str {
        match self {
            MapField::Channel => "ch",
            MapField::Rank => "ra",
            MapField::BankGroup => "bg",
            MapField::Bank => "ba",
            MapField::Column => "co",
            MapField::Row => "ro",
        }
    }
}

/// Mixed-radix address interleaving, listed from the least significant field
/// (just above the cacheline offset) to the most significant.
///
/// The default `ch,bg,ba,ra,co,ro` puts consecutive cachelines on alternating
/// channels and then alternating bank groups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AddressMapping {
    order: [MapField; 6],
}

impl Default for AddressMapping {
    fn default() -> Self {
        Self {
            order: [
                MapField::Channel,
                MapField::BankGroup,
                MapField::Bank,
                MapField::Rank,
                MapField::Column,
                MapField::Row,
            ],
        }
    }
}

impl AddressMapping {
    pub fn new(order: [MapField; 6]) -> Result<Self, DramError> {
        for f in MapField::ALL {
            if order.iter().filter(|&&o| o == f).count() != 1 {
                return Err(DramError::BadMapping(alloc::format!(
                    "field {} must appear exactly once",
                    f.short()
                )));
            }
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> &[MapField; 6] {
        &self.order
    }

    pub fn map(&self, cfg: &DramConfig, addr: u64) -> Result<DramCoord, DramError> {
        if addr >= cfg.capacity() {
            return Err(DramError::OutOfRange {
                addr,
                capacity: cfg.capacity(),
            });
        }
        let line = cfg.cacheline_bytes as u64;
        let mut coord = DramCoord {
            byte_offset: (addr % line) as u32,
            ..DramCoord::default()
        };
        let mut rest = addr / line;
        for f in self.order {
            let ext = f.extent(cfg);
            f.set(&mut coord, (rest % ext) as u32);
            rest /= ext;
        }
        Ok(coord)
    }

    pub fn unmap(&self, cfg: &DramConfig, coord: &DramCoord) -> u64 {
        let mut acc = 0u64;
        for f in self.order.iter().rev() {
            acc = acc * f.extent(cfg) + f.get(coord) as u64;
        }
        acc * cfg.cacheline_bytes as u64 + coord.byte_offset as u64
    }
}

impl fmt::Display for AddressMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.order.iter().map(|m| m.short()).collect();
        f.write_str(&parts.join(","))
    }
}

impl From<AddressMapping> for String {
    fn from(m: AddressMapping) -> String {
        alloc::format!("{m}")
    }
}

impl TryFrom<String> for AddressMapping {
    type Error = DramError;

    fn try_from(s: String) -> Result<Self, DramError> {
        s.parse()
    }
}

impl FromStr for AddressMapping {
    type Err = DramError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut order = Vec::new();
        for tok in s.split(',') {
            let f = match tok.trim() {
                "ch" => MapField::Channel,
                "ra" => MapField::Rank,
                "bg" => MapField::BankGroup,
                "ba" => MapField::Bank,
                "co" => MapField::Column,
                "ro" => MapField::Row,
                other => {
                    return Err(DramError::BadMapping(String::from(other)));
                }
            };
            order.push(f);
        }
        let order: [MapField; 6] = order
            .try_into()
            .map_err(|_| DramError::BadMapping(String::from("expected six fields")))?;
        Self::new(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_address() {
        let cfg = DramConfig::default();
        assert_eq!(cfg.mapping.map(&cfg, 0).unwrap(), DramCoord::default());
    }

    #[test]
    fn second_line_is_other_channel() {
        let cfg = DramConfig::default();
        let c = cfg.mapping.map(&cfg, 64).unwrap();
        assert_eq!(
            c,
            DramCoord {
                channel: 1,
                ..DramCoord::default()
            }
        );
        // then bank group, then bank, then column
        assert_eq!(cfg.mapping.map(&cfg, 128).unwrap().bank_group, 1);
        assert_eq!(cfg.mapping.map(&cfg, 64 * 8).unwrap().bank, 1);
        let c = cfg.mapping.map(&cfg, 64 * 32).unwrap();
        assert_eq!((c.column, c.bank, c.channel), (1, 0, 0));
        let c = cfg.mapping.map(&cfg, cfg.row_stripe_bytes()).unwrap();
        assert_eq!((c.row, c.column), (1, 0));
    }

    #[test]
    fn out_of_range() {
        let cfg = DramConfig::default();
        assert!(matches!(
            cfg.mapping.map(&cfg, cfg.capacity()),
            Err(DramError::OutOfRange { .. })
        ));
    }

    #[test]
    fn parse_and_print() {
        let m: AddressMapping = "ro,co,ra,ba,bg,ch".parse().unwrap();
        assert_eq!(alloc::format!("{m}"), "ro,co,ra,ba,bg,ch");
        assert!("ch,ch,bg,ba,co,ro".parse::<AddressMapping>().is_err());
        assert!("ch,bg".parse::<AddressMapping>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn map_round_trip(addr in 0u64..(1u64 << 34)) {
            let cfg = DramConfig::default();
            let c = cfg.mapping.map(&cfg, addr).unwrap();
            prop_assert_eq!(cfg.mapping.unmap(&cfg, &c), addr);
        }

        #[test]
        fn alternate_mapping_round_trip(addr in 0u64..(1u64 << 34)) {
            let cfg = DramConfig { mapping: "ro,ba,co,ch,ra,bg".parse().unwrap(), ..DramConfig::default() };
            let c = cfg.mapping.map(&cfg, addr).unwrap();
            prop_assert_eq!(cfg.mapping.unmap(&cfg, &c), addr);
        }
    }
}
