//! CSV export for traces and gap sequences.

use super::FilterTrace;

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

/// Columns `step, state_0, …, state_{p−1}, log_increment`. Step 0 is the
/// prior and carries increment 0.
pub fn trace_to_csv(trace: &FilterTrace) -> String {
    let p = trace.posteriors[0].dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["step".to_string()];
    header.extend((0..p).map(|i| format!("state_{i}")));
    header.push("log_increment".into());
    w.write_record(&header).unwrap();
    for (k, post) in trace.posteriors.iter().enumerate() {
        let inc = if k == 0 { 0.0 } else { trace.log_increments[k - 1] };
        let mut rec = vec![k.to_string()];
        rec.extend(post.iter().map(|x| x.to_string()));
        rec.push(inc.to_string());
        w.write_record(&rec).unwrap();
    }
    into_string(w)
}

/// Two-column series `index_name, value_name`, indices starting at `first`.
pub fn gaps_to_csv(index_name: &str, value_name: &str, first: usize, values: &[f64]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([index_name, value_name]).unwrap();
    for (i, v) in values.iter().enumerate() {
        w.write_record([(first + i).to_string(), v.to_string()]).unwrap();
    }
    into_string(w)
}
