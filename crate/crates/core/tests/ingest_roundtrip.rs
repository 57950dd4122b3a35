use std::collections::BTreeMap;

use chrono::NaiveDate;
use herdsim_core::ingest::{
    load_returns_panel, log_returns, read_index_series, read_return_series, read_returns_panel,
    read_search_series, read_sector_map, write_index_series, write_return_series,
    write_returns_panel, write_search_series, write_sector_map, IndexSeries, PanelLoadOptions,
    ReturnSeries, ReturnsPanel, SearchLoadOptions, SearchSeries, TimeAxis,
};
use proptest::prelude::*;

fn dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2001, 3, 1).unwrap();
    (0..n).map(|i| start + chrono::Days::new(i as u64)).collect()
}

fn weeks(n: usize, offset: u64) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2010, 1, 4).unwrap();
    (0..n).map(|i| start + chrono::Days::new(7 * (i as u64 + offset))).collect()
}

fn panel_bytes(panel: &ReturnsPanel) -> Vec<u8> {
    let mut buf = Vec::new();
    write_returns_panel(panel, &mut buf).unwrap();
    buf
}

fn sector_map(panel: &ReturnsPanel) -> BTreeMap<String, u32> {
    panel.tickers.iter().cloned().zip(panel.sectors.iter().copied()).collect()
}

proptest! {
    #[test]
    fn index_series_round_trip(
        rows in prop::collection::vec((1e-3f64..1e5, 0.0f64..1e9), 2..60)
    ) {
        let (close, volume): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
        let series = IndexSeries::new(dates(close.len()), close, volume).unwrap();
        let mut buf = Vec::new();
        write_index_series(&series, &mut buf).unwrap();
        prop_assert_eq!(read_index_series(buf.as_slice(), "mem").unwrap(), series);
    }

    #[test]
    fn log_returns_recover_prices(close in prop::collection::vec(0.5f64..2.0, 2..300)) {
        let series = IndexSeries::new(dates(close.len()), close.clone(), vec![1.0; close.len()]).unwrap();
        let r = log_returns(&series);
        let mut level = 0.0;
        for (i, x) in r.returns.iter().enumerate() {
            level += x;
            let rebuilt = close[0] * level.exp();
            prop_assert!((rebuilt / close[i + 1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn return_series_round_trip(
        values in prop::collection::vec(-1.0f64..1.0, 2..100),
        with_volume in any::<bool>(),
    ) {
        let volume = with_volume.then(|| values.iter().map(|v| v.abs() * 100.0).collect());
        let series = ReturnSeries::new(TimeAxis::Dates(dates(values.len())), values, volume).unwrap();
        let mut buf = Vec::new();
        write_return_series(&series, &mut buf).unwrap();
        prop_assert_eq!(read_return_series(buf.as_slice(), "mem").unwrap(), series);
    }

    #[test]
    fn panel_round_trip_and_permutation(
        n_tickers in 1usize..12,
        n_dates in 2usize..40,
        seed in any::<u64>(),
        rotate in 0usize..12,
    ) {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let tickers: Vec<String> = (0..n_tickers).map(|i| format!("K{i}")).collect();
        let sectors: Vec<u32> = (0..n_tickers).map(|i| (i % 3) as u32 + 1).collect();
        let columns: Vec<Vec<f64>> = (0..n_tickers).map(|_| (0..n_dates).map(|_| next()).collect()).collect();
        let panel = ReturnsPanel::new(TimeAxis::Dates(dates(n_dates)), tickers, sectors, columns).unwrap();
        let map = sector_map(&panel);
        let back = read_returns_panel(panel_bytes(&panel).as_slice(), "mem", &map, PanelLoadOptions::default()).unwrap();
        prop_assert_eq!(&back, &panel);

        let k = rotate % n_tickers;
        let mut order: Vec<usize> = (0..n_tickers).collect();
        order.rotate_left(k);
        let permuted = ReturnsPanel::new(
            panel.time.clone(),
            order.iter().map(|&i| panel.tickers[i].clone()).collect(),
            order.iter().map(|&i| panel.sectors[i]).collect(),
            order.iter().map(|&i| panel.columns[i].clone()).collect(),
        )
        .unwrap();
        let reloaded = read_returns_panel(panel_bytes(&permuted).as_slice(), "mem", &map, PanelLoadOptions::default()).unwrap();
        prop_assert_eq!(reloaded.by_ticker(), panel.by_ticker());
    }

    #[test]
    fn search_and_sector_round_trip(
        vols in prop::collection::vec(prop::collection::vec(0.0f64..1e4, 5..30), 1..5)
    ) {
        let series: Vec<SearchSeries> = vols
            .iter()
            .enumerate()
            .map(|(i, v)| SearchSeries::new(format!("S{i}"), weeks(v.len(), 0), v.clone()).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_search_series(&series, &mut buf).unwrap();
        let opts = SearchLoadOptions { align: false, min_weeks: 0 };
        prop_assert_eq!(read_search_series(buf.as_slice(), "mem", opts).unwrap(), series.clone());

        let map: BTreeMap<String, u32> = series.iter().enumerate().map(|(i, s)| (s.ticker.clone(), i as u32 + 1)).collect();
        let mut buf = Vec::new();
        write_sector_map(&map, &mut buf).unwrap();
        prop_assert_eq!(read_sector_map(buf.as_slice(), "mem").unwrap(), map);
    }
}

#[test]
fn wide_panel_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let tickers: Vec<String> = (0..108).map(|i| format!("STK{i:03}")).collect();
    let mut panel = format!("date,{}\n", tickers.join(","));
    for (d, day) in dates(30).iter().enumerate() {
        let row: Vec<String> = (0..108).map(|i| format!("{}", ((d * 31 + i * 7) % 13) as f64 / 100.0 - 0.06)).collect();
        panel.push_str(&format!("{day},{}\n", row.join(",")));
    }
    let mut sectors = String::from("ticker,sector_id\n");
    for (i, t) in tickers.iter().enumerate() {
        sectors.push_str(&format!("{t},{}\n", i % 5 + 1));
    }
    std::fs::write(dir.path().join("panel.csv"), panel).unwrap();
    std::fs::write(dir.path().join("sectors.csv"), sectors).unwrap();
    let loaded = load_returns_panel(
        dir.path().join("panel.csv"),
        dir.path().join("sectors.csv"),
        PanelLoadOptions::default(),
    )
    .unwrap();
    assert_eq!(loaded.n_tickers(), 108);
    assert_eq!(loaded.n_dates(), 30);
    assert_eq!(loaded.distinct_sectors().len(), 5);
}

#[test]
fn offset_search_series_share_a_clock() {
    let a = SearchSeries::new("A", weeks(20, 0), vec![1.0; 20]).unwrap();
    let b = SearchSeries::new("B", weeks(20, 5), vec![2.0; 20]).unwrap();
    let mut buf = Vec::new();
    write_search_series(&[a, b], &mut buf).unwrap();
    let aligned = read_search_series(buf.as_slice(), "mem", SearchLoadOptions { align: true, min_weeks: 10 }).unwrap();
    assert_eq!(aligned[0].weeks, aligned[1].weeks);
    assert_eq!(aligned[0].len(), 15);
    assert_eq!(aligned[0].weeks[0], weeks(1, 5)[0]);
}
