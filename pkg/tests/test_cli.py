import json

import pytest
from click.testing import CliRunner

from cli import cli, run_cli


@pytest.fixture
def runner():
    return CliRunner()


def test_paper_check(runner):
    result = runner.invoke(cli, ['paper-check'])
    assert result.exit_code == 0
    assert '19/19 rows reproduced' in result.stdout
    assert '| Linear SVC |' in result.stdout


def test_paper_check_json(runner, tmp_path):
    out = tmp_path / 'paper.json'
    result = runner.invoke(cli, ['paper-check', '--format', 'json', '--out', str(out)])
    assert result.exit_code == 0
    assert result.stdout == ''
    payload = json.loads(out.read_text(encoding='utf-8'))
    assert payload['summary'] == '19/19 rows reproduced'
    assert len(payload['rows']) == 19


def test_missing_input_file(runner, tmp_path):
    result = runner.invoke(cli, ['stats', '--input', str(tmp_path / 'missing.csv')])
    assert result.exit_code == 2
    assert 'Erro' in result.stderr


def test_unknown_option_is_usage_error(runner):
    result = runner.invoke(cli, ['stats', '--no-such-option'])
    assert result.exit_code == 1


def test_unknown_model_kind_is_usage_error(runner, corpus_csv):
    result = runner.invoke(cli, ['benchmark', '--input', str(corpus_csv), '--model', 'naive'])
    assert result.exit_code == 1


def test_wrong_column_reports_schema_error(runner, corpus_csv):
    result = runner.invoke(cli, ['stats', '--input', str(corpus_csv), '--text-col', 'tweet'])
    assert result.exit_code == 2
    assert 'tweet' in result.stderr


def test_stats_formats(runner, corpus_csv):
    markdown = runner.invoke(cli, ['stats', '--input', str(corpus_csv)])
    assert markdown.exit_code == 0
    assert '## By label' in markdown.stdout

    as_json = runner.invoke(cli, ['stats', '--input', str(corpus_csv), '--format', 'json'])
    assert as_json.exit_code == 0
    payload = json.loads(as_json.stdout)
    assert len(payload['by_label']) == 2


def test_preprocess(runner, tmp_path):
    path = tmp_path / 'tiny.csv'
    path.write_text('message,cyberbullying\n"Sen tam bir QERİZEKALİİİ!!!",1\n', encoding='utf-8')
    result = runner.invoke(cli, ['preprocess', '--input', str(path)])
    assert result.exit_code == 0
    assert result.stdout == '1\ttam gerizekali\n'


def test_benchmark_output_is_deterministic(runner, corpus_csv, tmp_path):
    outputs = []
    for name in ('first.json', 'second.json'):
        out = tmp_path / name
        result = runner.invoke(cli, ['benchmark', '--input', str(corpus_csv),
                                     '--model', 'multinomial_nb', '--model', 'knn',
                                     '--format', 'json', '--out', str(out)])
        assert result.exit_code == 0
        outputs.append(out.read_text(encoding='utf-8'))
    assert outputs[0] == outputs[1]
    report = json.loads(outputs[0])
    assert sorted(r['kind'] for r in report['results']) == ['knn', 'multinomial_nb']
    assert report['metadata']['test'] == 18


def test_train_evaluate_predict(runner, corpus_csv, tmp_path):
    model_path = tmp_path / 'model.json'
    trained = runner.invoke(cli, ['train', '--input', str(corpus_csv),
                                  '--model', 'bernoulli_nb', '--out', str(model_path)])
    assert trained.exit_code == 0
    assert json.loads(model_path.read_text(encoding='utf-8'))['kind'] == 'bernoulli_nb'

    evaluated = runner.invoke(cli, ['evaluate', str(model_path), '--input', str(corpus_csv),
                                    '--format', 'json'])
    assert evaluated.exit_code == 0
    confusion = json.loads(evaluated.stdout)['confusion']
    assert sum(confusion.values()) == 60

    predicted = runner.invoke(cli, ['predict', str(model_path), '--format', 'json'],
                              input='Sen tam bir gerizekalısın\nbugün hava güzel\n')
    assert predicted.exit_code == 0
    records = json.loads(predicted.stdout)
    assert len(records) == 2
    assert all(0.0 <= r['probability'] <= 1.0 for r in records)
    assert all(r['label'] == int(r['probability'] > 0.5) for r in records)


def test_train_missing_input_is_file_error(runner, tmp_path):
    result = runner.invoke(cli, ['train', '--model', 'lgbm_style',
                                 '--input', str(tmp_path / 'missing.csv')])
    assert result.exit_code == 2
    assert 'Erro' in result.stderr
    assert 'missing.csv' in result.stderr


def test_train_default_out_path(runner, corpus_csv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = runner.invoke(cli, ['train', '--input', str(corpus_csv), '--model', 'multinomial_nb'])
    assert result.exit_code == 0
    saved = json.loads((tmp_path / 'multinomial_nb.model.json').read_text(encoding='utf-8'))
    assert saved['kind'] == 'multinomial_nb'


def test_evaluate_corrupt_model(runner, corpus_csv, tmp_path):
    model_path = tmp_path / 'model.json'
    model_path.write_text('{not json', encoding='utf-8')
    result = runner.invoke(cli, ['evaluate', str(model_path), '--input', str(corpus_csv)])
    assert result.exit_code == 2
    assert 'Erro' in result.stderr


def test_run_cli_returns_code(capsys):
    assert run_cli(['paper-check', '--format', 'csv']) == 0
    assert 'Linear SVC' in capsys.readouterr().out
