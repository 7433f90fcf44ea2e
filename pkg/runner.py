import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from common import metrics, reports
from common.backtest import (SignalSeries, equity_curve, plan_windows, read_equity_csv, run_walkforward,
                             write_equity_csv, write_signals_csv)
from common.config import ExperimentConfig, load_config, read_raw
from common.dataio import RunFolder, dataset_to_csv, load_dataset, parse_rates_csv, read_source
from common.errors import ConfigError, DataError, SeanceError
from common.learners.serialize import save_model
from common.signals import StrategyRegistry, load_strategies
from common.synthetic import SynthConfig, write_synthetic
from common.utils import charts, pretty

logging.basicConfig(
    level=logging.INFO,
    format="[%(asctime)s] %(levelname)s (%(name)s %(module)s) %(message)s",
)
logger = logging.getLogger('SEANCE.Main')

SEANCE_VERSION = '1.0.0'
RUN_FORMAT = 'seance-run'
COMPARE_ORDER = ['passive', 'lstm', 'gbt', 'rf', 'model_a'] # Ordre des colonnes de comparaison

# Exécution d'une expérience ------------------------------------------------

def _load_registry(config_path: str | Path) -> StrategyRegistry:
    raw = read_raw(config_path)
    return load_strategies(required=raw.get('model', 'passive'))


def _walkforward(registry: StrategyRegistry, config: ExperimentConfig, dataset, strategy_id: str, args: argparse.Namespace,
                 on_fit=None) -> SignalSeries:
    plan = plan_windows(len(dataset), config.train_window, config.test_window)
    strategy = registry.create(strategy_id, config.strategy_params())
    logger.info(f"Walk-forward '{strategy_id}' : {len(plan)} fenêtres {config.train_window}/{config.test_window}")
    args.phase = 'model'
    signals = run_walkforward(strategy, dataset, plan, config.seed, cost_per_side=config.cost_per_side,
                              workers=config['walkforward.workers'], min_train_days=config['walkforward.min_train_days'],
                              on_fit=on_fit)
    args.phase = None
    return signals


def build_manifest(config: ExperimentConfig, dataset, seeds: list[int]) -> dict[str, Any]:
    """Manifeste de run : configuration résolue, empreinte des données, version, graines (sans horodatage)"""
    meta = dataset.metadata
    return {
        'format': RUN_FORMAT,
        'config_version': config['config.version'],
        'tool_version': SEANCE_VERSION,
        'model': config.model,
        'benchmark': config.benchmark,
        'dataset': {'fingerprint': dataset.fingerprint(), 'start': meta['start'], 'end': meta['end'], 'n': meta['n']},
        'config': config.resolved(),
        'window_seeds': seeds
    }


def cmd_run(args: argparse.Namespace) -> int:
    """Ingestion → walk-forward → mesures → fichiers de résultats"""
    registry = _load_registry(args.config)
    config = load_config(args.config, registry).override(**{
        'seed': args.seed,
        'cost_per_side': args.cost,
        'output_dir': str(Path(args.out).resolve()) if args.out else None
    })
    if config.seed < 0 or config.cost_per_side < 0:
        raise ConfigError("--seed et --cost doivent être positifs")
    dataset = load_dataset(config.path('data.es_csv'), config.path('data.vix_csv'), config.path('data.rates_csv'),
                           start=config.start, end=config.end)
    if len(dataset) <= config.train_window:
        raise DataError(f"{len(dataset)} séances pour une fenêtre d'entraînement de {config.train_window}")

    fitted: dict[int, Any] = {}
    signals = _walkforward(registry, config, dataset, config.model, args,
                           on_fit=fitted.__setitem__ if config['report.save_models'] else None)
    bench = signals if config.benchmark == config.model else _walkforward(registry, config, dataset, config.benchmark, args)

    cols = dataset.columns
    sections = reports.run_sections(signals, bench, cols.dates, cols.rf_annual, excess_mode=config['metrics.excess_mode'],
                                    daily_drawdown=config['metrics.daily_drawdown'])
    monthly = metrics.compound_monthly(signals.daily_returns())
    bin_width = config['report.hist_bin_width']
    hist = metrics.histogram(signals.strategy_returns, bin_width)
    curve, bench_curve = equity_curve(signals.daily_returns()), equity_curve(bench.daily_returns())
    plan = plan_windows(len(dataset), config.train_window, config.test_window)

    folder = RunFolder(config.output_dir, create=True)
    folder.write_yaml('manifest.yaml', build_manifest(config, dataset, plan.seeds(config.seed)))
    folder.write_text('signals.csv', write_signals_csv(signals))
    folder.write_text('equity.csv', write_equity_csv(curve))
    folder.write_frame('report.csv', reports.sections_to_frame(sections))
    folder.write_text('report.md', reports.sections_to_markdown(
        f"{config.name} : {config.model} vs {config.benchmark}", sections, [config.model, config.benchmark], monthly=monthly,
        notes=[f"{dataset.start} → {dataset.end}, N = {len(dataset)}, {len(signals)} jours de test"]))
    folder.write_text('monthly.csv', metrics.write_monthly_csv(monthly))
    folder.write_text('hist.csv', '\n'.join(['lower_edge,count', *(f"{pretty.csv_value(e)},{c}" for e, c in hist)]) + '\n')
    folder.write_text('hist.svg', charts.histogram_svg({config.model: hist,
                                                         config.benchmark: metrics.histogram(bench.strategy_returns, bin_width)},
                                                        bin_width))
    folder.write_text('equity.svg', charts.equity_svg({config.model: (curve.dates, curve.values),
                                                       config.benchmark: (bench_curve.dates, bench_curve.values)}))
    if fitted:
        # Fenêtre la plus récente : les modèles prêts pour la séance suivante
        models = registry.create(config.model, config.strategy_params()).models(fitted[max(fitted)])
        if models:
            folder.file('models').mkdir(exist_ok=True)
        for name, model in models.items():
            save_model(model, folder.file(f'models/{name}.yaml'))
    print(f"> Résultats écrits dans {folder.path}")
    further = next(s for s in sections if s.title == reports.SECTION_STANDARD)
    print(pretty.plain_table(['Metric', config.model, config.benchmark],
                             [[r.label, *(pretty.format_value(v, r.kind) for v in r.values)] for r in further.rows]))
    return 0

# Comparaison de runs -------------------------------------------------------

def _compare_key(item: tuple[int, str]) -> tuple[int, int]:
    index, model = item
    return (COMPARE_ORDER.index(model) if model in COMPARE_ORDER else len(COMPARE_ORDER), index)


def cmd_compare(args: argparse.Namespace) -> int:
    """Tableau côte à côte de plusieurs runs d'un même dataset et superposition des courbes"""
    if len(args.runs) < 2:
        raise ConfigError("au moins deux dossiers de runs sont nécessaires")
    folders = [RunFolder(p) for p in args.runs]
    manifests = [f.read_yaml('manifest.yaml') for f in folders]
    reference = manifests[0]['dataset']['fingerprint']
    for folder, manifest in zip(folders[1:], manifests[1:]):
        fingerprint = manifest['dataset']['fingerprint']
        if fingerprint != reference:
            raise DataError(f"empreintes de données différentes : {folders[0].path} = {reference}, {folder.path} = {fingerprint}")

    order = sorted(enumerate(m['model'] for m in manifests), key=_compare_key)
    names = [m for _, m in order]
    columns = [f"{m} ({folders[i].path.name})" if names.count(m) > 1 else m for i, m in order]
    merged = reports.merge_columns([reports.frame_to_sections(folders[i].read_frame('report.csv'), 'strategy') for i, _ in order])

    out = RunFolder(args.out or '.', create=True)
    out.write_text('compare.md', reports.sections_to_markdown(f"Comparaison ({len(columns)} runs)", merged, columns,
                                                              notes=[f"Empreinte des données : {reference}"]))
    out.write_frame('compare.csv', reports.sections_to_frame(merged, columns))
    curves = {}
    for (i, _), name in zip(order, columns):
        curve = read_equity_csv(folders[i].read_text('equity.csv'), source=str(folders[i].file('equity.csv')))
        curves[name] = (curve.dates, curve.values)
    out.write_text('compare.svg', charts.equity_svg(curves))
    print(f"> Comparaison écrite dans {out.path}")
    return 0

# Mesures depuis des rendements mensuels --------------------------------------

def cmd_metrics(args: argparse.Namespace) -> int:
    """Mesures mensuelles complètes à partir de CSV year,month,percent"""
    model = metrics.read_monthly_csv(read_source(args.monthly), source=args.monthly)
    bench = metrics.read_monthly_csv(read_source(args.benchmark), source=args.benchmark)
    metrics.check_aligned(model, bench)
    rates = parse_rates_csv(read_source(args.rates), source=args.rates)
    rf = metrics.monthly_risk_free([r.date for r in rates], [r.annual_yield for r in rates], model.periods)
    sections = reports.performance_sections(model, bench, rf, excess_mode=args.excess_mode)
    columns = [Path(args.monthly).stem, Path(args.benchmark).stem]

    out = RunFolder(args.out or '.', create=True)
    out.write_text('metrics.md', reports.sections_to_markdown(f"{columns[0]} vs {columns[1]}", sections, columns, monthly=model))
    out.write_frame('metrics.csv', reports.sections_to_frame(sections))
    for section in sections:
        print(f"\n{section.title}")
        print(pretty.plain_table(['Metric', *columns], [[r.label, *(pretty.format_value(v, r.kind) for v in r.values)] for r in section.rows]))
    return 0

# Données ---------------------------------------------------------------------

def cmd_validate_data(args: argparse.Namespace) -> int:
    """Charge et aligne les données d'une configuration, sans rien entraîner"""
    config = load_config(args.config, _load_registry(args.config))
    dataset = load_dataset(config.path('data.es_csv'), config.path('data.vix_csv'), config.path('data.rates_csv'),
                           start=config.start, end=config.end)
    cols = dataset.columns
    print(pretty.plain_table(['', ''], [
        ['Séances', len(dataset)],
        ['Période', f"{dataset.start} → {dataset.end}"],
        ['Jours en hausse', f"{int(np.sum(cols.label > 0))} ({pretty.format_percent(float(np.mean(cols.label > 0)))})"],
        ['Taux moyen', pretty.format_percent(float(np.mean(cols.rf_annual)))],
        ['Empreinte', dataset.fingerprint()]
    ]))
    if args.export:
        path = Path(args.export)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dataset_to_csv(dataset), encoding='utf-8', newline='\n')
        print(f"> Dataset exporté dans {path}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    """Écrit un triplet ES / VIX / taux synthétique"""
    try:
        cfg = SynthConfig(n_days=args.days, seed=args.seed, rate_mode=args.rates)
    except ValueError as e:
        raise ConfigError(str(e))
    paths = write_synthetic(args.out, cfg)
    print('\n'.join(f"> {p}" for p in paths))
    return 0

# Ligne de commande -----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='seance', description="Backtests walk-forward de stratégies de séance sur les futures S&P 500")
    parser.add_argument('--version', action='version', version=f'%(prog)s {SEANCE_VERSION}')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help="journalisation détaillée (DEBUG)")
    verbosity.add_argument('-q', '--quiet', action='store_true', help="avertissements et erreurs seulement")
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    run = sub.add_parser('run', help="exécute une expérience")
    run.add_argument('--config', required=True)
    run.add_argument('--out', help="dossier de sortie (remplace output_dir)")
    run.add_argument('--seed', type=int, help="graine maîtresse (remplace seed)")
    run.add_argument('--cost', type=float, help="coût par côté (remplace cost_per_side)")
    run.set_defaults(handler=cmd_run)

    compare = sub.add_parser('compare', help="compare plusieurs runs")
    compare.add_argument('runs', nargs='+')
    compare.add_argument('--out')
    compare.set_defaults(handler=cmd_compare)

    met = sub.add_parser('metrics', help="mesures depuis des rendements mensuels (year,month,percent)")
    met.add_argument('--monthly', required=True)
    met.add_argument('--benchmark', required=True)
    met.add_argument('--rates', required=True)
    met.add_argument('--excess-mode', choices=metrics.EXCESS_MODES, default='geometric')
    met.add_argument('--out')
    met.set_defaults(handler=cmd_metrics)

    val = sub.add_parser('validate-data', help="vérifie et aligne les données d'une configuration")
    val.add_argument('--config', required=True)
    val.add_argument('--export', help="écrit le dataset aligné au format CSV canonique")
    val.set_defaults(handler=cmd_validate_data)

    syn = sub.add_parser('synth', help="génère des données synthétiques")
    syn.add_argument('--out', required=True)
    syn.add_argument('--days', type=int, default=1510)
    syn.add_argument('--seed', type=int, default=0)
    syn.add_argument('--rates', choices=('constant', 'stepped'), default='stepped')
    syn.set_defaults(handler=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Point d'entrée : renvoie le code de sortie (1 configuration, 2 données, 3 modèle)"""
    args = argparse.Namespace(phase=None)
    try:
        build_parser().parse_args(argv, namespace=args)
        logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO)
        return args.handler(args)
    except SeanceError as error:
        print(f"Erreur · [{error.category}] {error}", file=sys.stderr)
        return error.exit_code
    except Exception as error:
        logger.error(f"Erreur inattendue : {error}", exc_info=True)
        print(f"Erreur · Une erreur est survenue lors de l'exécution de la commande : {error}", file=sys.stderr)
        return 3 if args.phase == 'model' else 1


if __name__ == '__main__':
    sys.exit(main())
