"""
Linha de comando: estatísticas, pré-processamento, treino, avaliação,
benchmark, predição e conferência das tabelas publicadas.
"""
import json
import logging
import sys
from pathlib import Path
from typing import Dict, Optional

import click
import pandas as pd

import config
from utils.corpus_io import CorpusLoader, LabeledCorpus
from utils.errors import CyberbullyingError
from utils.eval_harness import (DEFAULT_GRIDS, BenchmarkConfig, confusion_matrix, grid_search,
                                render_report, reproduce_paper_tables, run_benchmark,
                                summarize_metrics)
from utils.featurizer import FeatureSpace
from utils.model_api import (KINDS, ClassifierSpec, fit_model, load_model, predict_labels,
                             predict_proba, save_model, threshold_labels)
from utils.turkish_normalizer import TurkishNormalizer

logger = logging.getLogger(__name__)

FORMATS = ('md', 'csv', 'json')


class CliGroup(click.Group):
    """Grupo que traduz erros em códigos de saída: 1 uso, 2 dados/modelo"""

    def main(self, args=None, prog_name=None, standalone_mode=True, **extra):
        try:
            result = super().main(args, prog_name, standalone_mode=False, **extra)
            code = result if isinstance(result, int) else 0
        except click.UsageError as exc:
            exc.show()
            code = 1
        except click.exceptions.Abort:
            click.echo("Abortado.", err=True)
            code = 1
        except click.ClickException as exc:
            exc.show()
            code = 2
        except (CyberbullyingError, OSError) as exc:
            click.echo(f"Erro: {exc}", err=True)
            code = 2
        if standalone_mode:
            sys.exit(code)
        return code


def run_cli(args) -> int:
    """Executa a CLI com a lista de argumentos e devolve o código de saída"""
    return cli.main(list(args), prog_name='cyberbullying', standalone_mode=False)


def _emit(text: str, out: Optional[str]):
    """Resultado no arquivo --out ou na saída padrão"""
    if out:
        Path(out).write_text(text, encoding='utf-8')
        logger.info("Resultado gravado em %s", out)
    else:
        click.echo(text, nl=False)


def _load(input_path: str, text_col: str, label_col: str) -> LabeledCorpus:
    return CorpusLoader.load_corpus(input_path, text_col, label_col)


def _normalizer(stopwords: Optional[str], lexicon: Optional[str]) -> TurkishNormalizer:
    return TurkishNormalizer.from_files(stopwords, lexicon)


def _parallel_overrides() -> Dict[str, Dict[str, int]]:
    """Processos na construção das florestas (CYBERBULLYING_N_JOBS)"""
    return {kind: {'n_jobs': config.N_JOBS} for kind in ('random_forest', 'extra_trees')}


# Opções compartilhadas
input_option = click.option('--input', 'input_path', default=str(config.PATHS['corpus']),
                            show_default=True, help='CSV UTF-8 com cabeçalho.')
text_col_option = click.option('--text-col', default=config.EXPERIMENT_CONFIG['text_col'],
                               show_default=True, help='Coluna com o texto.')
label_col_option = click.option('--label-col', default=config.EXPERIMENT_CONFIG['label_col'],
                                show_default=True, help='Coluna com o rótulo 0/1.')
seed_option = click.option('--seed', default=config.EXPERIMENT_CONFIG['seed'], type=int,
                           show_default=True, help='Semente mestre.')
test_fraction_option = click.option('--test-fraction', type=float, show_default=True,
                                    default=config.EXPERIMENT_CONFIG['test_fraction'],
                                    help='Fração de teste em (0, 1).')
min_df_option = click.option('--min-df', default=config.EXPERIMENT_CONFIG['min_df'], type=int,
                             show_default=True, help='Frequência mínima de documento.')
grid_option = click.option('--grid-search', 'use_grid', is_flag=True, default=False,
                           show_default=True,
                           help='Otimiza hiperparâmetros por validação cruzada no treino.')
stopwords_option = click.option('--stopwords', default=str(config.PATHS['stopwords']),
                                show_default=True, help='Lista de stopwords, uma por linha.')
lexicon_option = click.option('--lexicon', default=str(config.PATHS['lexicon']),
                              show_default=True, help='Léxico variante<TAB>canônica.')
out_option = click.option('--out', default=None, show_default=True,
                          help='Arquivo de saída (padrão: saída padrão).')
format_option = click.option('--format', 'fmt', type=click.Choice(FORMATS), default='md',
                             show_default=True, help='Formato da saída.')


@click.group(cls=CliGroup, context_settings={'help_option_names': ['-h', '--help']})
@click.option('--verbose', is_flag=True, default=False, show_default=True,
              help='Mostra o progresso (nível INFO) na saída de erro.')
def cli(verbose: bool):
    """Detecção de cyberbullying em textos curtos em turco."""
    level = logging.INFO if verbose else getattr(logging, str(config.LOG_LEVEL).upper(),
                                                 logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    logging.getLogger().setLevel(level)


@cli.command()
@input_option
@text_col_option
@label_col_option
@out_option
@format_option
def stats(input_path, text_col, label_col, out, fmt):
    """Estatísticas exploratórias por rótulo."""
    report = CorpusLoader.corpus_stats(_load(input_path, text_col, label_col),
                                       config.CHART_CONFIG['bins'])
    summary = report.summary.copy()
    summary.columns = [f'{metric}_{stat}' for metric, stat in summary.columns]
    summary = summary.reset_index()
    if fmt == 'json':
        text = json.dumps({'totals': report.totals, 'by_label': summary.to_dict('records')},
                          indent=2, sort_keys=True, ensure_ascii=False) + '\n'
    elif fmt == 'csv':
        text = summary.to_csv(index=False)
    else:
        lines = ['## Totals', '', '| Measure | Value |', '|---|---|']
        lines += [f'| {key} | {value:g} |' for key, value in report.totals.items()]
        lines += ['', '## By label', '']
        header = list(summary.columns)
        lines += ['| ' + ' | '.join(header) + ' |', '|' + '|'.join('---' for _ in header) + '|']
        for record in summary.itertuples(index=False):
            lines.append('| ' + ' | '.join(f'{value:g}' for value in record) + ' |')
        text = '\n'.join(lines) + '\n'
    _emit(text, out)


@cli.command()
@input_option
@text_col_option
@label_col_option
@stopwords_option
@lexicon_option
@out_option
@format_option
def preprocess(input_path, text_col, label_col, stopwords, lexicon, out, fmt):
    """Tokens normalizados de cada linha."""
    corpus = _load(input_path, text_col, label_col)
    tokens = _normalizer(stopwords, lexicon).normalize_many(corpus.texts)
    frame = pd.DataFrame({'label': corpus.labels, 'tokens': [' '.join(t) for t in tokens]})
    if fmt == 'json':
        text = json.dumps(frame.to_dict('records'), indent=2, ensure_ascii=False) + '\n'
    elif fmt == 'csv':
        text = frame.to_csv(index=False)
    else:
        text = ''.join(f'{label}\t{joined}\n' for label, joined in zip(frame['label'],
                                                                        frame['tokens']))
    _emit(text, out)


@cli.command()
@input_option
@text_col_option
@label_col_option
@click.option('--model', 'kind', type=click.Choice(KINDS), default='multinomial_nb',
              show_default=True, help='Tipo de modelo.')
@seed_option
@min_df_option
@grid_option
@stopwords_option
@lexicon_option
@click.option('--out', default=None,
              help='Arquivo JSON do modelo treinado (padrão: <modelo>.model.json).')
def train(input_path, text_col, label_col, kind, seed, min_df, use_grid, stopwords, lexicon,
          out):
    """Treina um modelo no corpus inteiro e grava o envelope JSON."""
    corpus = _load(input_path, text_col, label_col)
    tokens = _normalizer(stopwords, lexicon).normalize_many(corpus.texts)
    space = FeatureSpace.fit(tokens, min_df)
    X = space.transform(tokens)
    spec = ClassifierSpec(kind, _parallel_overrides().get(kind, {}))
    if use_grid and DEFAULT_GRIDS.get(kind):
        spec = grid_search(kind, DEFAULT_GRIDS[kind], X, corpus.labels,
                           config.EXPERIMENT_CONFIG['folds'], seed).best
    model = fit_model(spec, X, corpus.labels, seed)
    out = out or f'{kind}.model.json'
    save_model(model, out)
    click.echo(f"Modelo {kind} treinado com {len(corpus)} documentos -> {out}", err=True)


@cli.command()
@click.argument('model_file', type=click.Path(dir_okay=False))
@input_option
@text_col_option
@label_col_option
@stopwords_option
@lexicon_option
@out_option
@format_option
def evaluate(model_file, input_path, text_col, label_col, stopwords, lexicon, out, fmt):
    """Avalia um modelo salvo em um CSV rotulado."""
    model = load_model(model_file)
    corpus = _load(input_path, text_col, label_col)
    X = model.space.transform(_normalizer(stopwords, lexicon).normalize_many(corpus.texts))
    cm = confusion_matrix(corpus.labels, predict_labels(model, X))
    metrics = summarize_metrics(cm)
    if fmt == 'json':
        text = json.dumps({'kind': model.kind, 'confusion': cm.to_dict(),
                           'metrics': metrics.to_dict()}, indent=2, sort_keys=True) + '\n'
    elif fmt == 'csv':
        text = pd.DataFrame([{'kind': model.kind, **cm.to_dict(),
                              **metrics.to_dict()}]).to_csv(index=False)
    else:
        lines = [f'## {model.kind}', '', '| TP | FN | FP | TN |', '|---|---|---|---|',
                 f'| {cm.tp} | {cm.fn} | {cm.fp} | {cm.tn} |', '',
                 '| Metric | Value |', '|---|---|']
        lines += [f'| {name} | {100 * value:.3f} |' for name, value in metrics.to_dict().items()]
        text = '\n'.join(lines) + '\n'
    _emit(text, out)


@cli.command()
@input_option
@text_col_option
@label_col_option
@seed_option
@test_fraction_option
@min_df_option
@click.option('--model', 'kinds', type=click.Choice(KINDS), multiple=True,
              help='Restringe o benchmark a estes modelos (repetível; padrão: todos).')
@grid_option
@stopwords_option
@lexicon_option
@out_option
@format_option
def benchmark(input_path, text_col, label_col, seed, test_fraction, min_df, kinds,
              use_grid, stopwords, lexicon, out, fmt):
    """Treina e avalia os dezenove modelos numa divisão estratificada."""
    corpus = _load(input_path, text_col, label_col)
    settings = BenchmarkConfig(seed=seed, test_fraction=test_fraction, min_df=min_df,
                               grid_search=use_grid, folds=config.EXPERIMENT_CONFIG['folds'],
                               kinds=tuple(kinds) or KINDS, overrides=_parallel_overrides(),
                               stopwords_path=stopwords, lexicon_path=lexicon)
    report = run_benchmark(corpus, settings)
    _emit(render_report(report, fmt), out)


@cli.command()
@click.argument('model_file', type=click.Path(dir_okay=False))
@stopwords_option
@lexicon_option
@out_option
@format_option
def predict(model_file, stopwords, lexicon, out, fmt):
    """Pontua mensagens da entrada padrão, uma por linha."""
    model = load_model(model_file)
    messages = [line.rstrip('\r\n') for line in click.get_text_stream('stdin', encoding='utf-8')]
    records = []
    if messages:
        X = model.space.transform(_normalizer(stopwords, lexicon).normalize_many(messages))
        probabilities = predict_proba(model, X)
        records = [{'probability': float(p), 'label': int(label)}
                   for p, label in zip(probabilities, threshold_labels(probabilities))]
    if fmt == 'json':
        text = json.dumps(records, indent=2) + '\n'
    elif fmt == 'csv':
        text = pd.DataFrame(records, columns=['probability', 'label']).to_csv(index=False)
    else:
        text = ''.join(f"{r['probability']:.6f}\t{r['label']}\n" for r in records)
    _emit(text, out)


@cli.command('paper-check')
@out_option
@format_option
@click.pass_context
def paper_check(ctx, out, fmt):
    """Recalcula as métricas publicadas a partir das matrizes de confusão publicadas."""
    result = reproduce_paper_tables(config.PATHS['paper_tables'])
    frame = result.to_frame()
    if fmt == 'json':
        text = json.dumps({'summary': result.summary_line, 'rows': frame.to_dict('records')},
                          indent=2, ensure_ascii=False) + '\n'
    elif fmt == 'csv':
        text = frame.to_csv(index=False)
    else:
        lines = ['| Model | F1 | Accuracy | Precision | Recall | Errata | Status |',
                 '|---|---|---|---|---|---|---|']
        for row in result.rows:
            values = ' | '.join(f'{row.computed[m]:.3f}' for m in ('f1', 'accuracy',
                                                                   'precision', 'recall'))
            status = 'ok' if row.passed else 'MISMATCH'
            lines.append(f"| {row.model} | {values} | {', '.join(row.errata_applied)} | {status} |")
        text = '\n'.join(lines) + '\n\n' + result.summary_line + '\n'
    _emit(text, out)
    if result.passed != len(result.rows):
        ctx.exit(2)


def main():
    cli.main(prog_name='cyberbullying')


if __name__ == '__main__':
    main()
