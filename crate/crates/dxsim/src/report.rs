//! Statistics CSV and JSON-lines traces.

use std::io::{self, Write};

use dxsim_core::trace::TraceEvent;
use dxsim_core::StatReport;

/// Column order of the statistics CSV. Float columns are empty when undefined
/// (`rbh` of a run without column commands).
pub const CSV_HEADER: &str = "label,mode,cycles,elapsed_ps,dram_reads,dram_writes,dram_acts,dram_pres,row_hits,rbh,bytes,\
bw_util,avg_occupancy,steady_bw_util,llc_hits,llc_misses,direct_dram,indirect_requests,capacity_drains,stream_stalls";

pub fn write_csv(w: impl Write, rows: &[StatReport]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record(CSV_HEADER.split(','))?;
    }
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(r: impl io::Read) -> csv::Result<Vec<StatReport>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

/// One JSON object per line, in time order.
pub fn write_trace(mut w: impl Write, events: &[TraceEvent]) -> io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_stable() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[StatReport::default()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        let mut empty = Vec::new();
        write_csv(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim_end(), CSV_HEADER);
    }

    #[test]
    fn rows_read_back() {
        let rows = vec![
            StatReport {
                label: "a".into(),
                mode: "dx100".into(),
                cycles: 10,
                rbh: Some(0.5),
                bw_util: 0.25,
                ..Default::default()
            },
            StatReport {
                label: "b,c".into(),
                mode: "baseline".into(),
                rbh: None,
                ..Default::default()
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn trace_lines_are_tagged() {
        let mut buf = Vec::new();
        write_trace(
            &mut buf,
            &[TraceEvent::Dispatch {
                t: 5,
                pc: 1,
                slot: 0,
            }],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"event\":\"dispatch\",\"t\":5,\"pc\":1,\"slot\":0}\n"
        );
    }
}
