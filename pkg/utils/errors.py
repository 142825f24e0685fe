"""
Hierarquia de exceções do projeto
"""
from typing import Optional


class CyberbullyingError(Exception):
    """Erro base de toda a biblioteca"""


class ConfigError(CyberbullyingError, ValueError):
    """Configuração ausente ou inválida"""


class AssetError(CyberbullyingError):
    """Arquivo de recurso empacotado ausente ou corrompido"""


class CorpusFileError(CyberbullyingError):
    """Arquivo de corpus inexistente ou ilegível"""


class CorpusEncodingError(CyberbullyingError, ValueError):
    """Bytes que não decodificam como UTF-8"""


class SchemaError(CyberbullyingError, ValueError):
    """Coluna exigida ausente no cabeçalho"""

    def __init__(self, column: str, message: Optional[str] = None):
        self.column = column
        super().__init__(message or f"Coluna '{column}' não encontrada no cabeçalho do CSV")


class RowError(CyberbullyingError, ValueError):
    """Linha com rótulo inválido"""

    def __init__(self, row_number: int, message: str):
        self.row_number = row_number
        super().__init__(f"Linha {row_number}: {message}")


class ParameterError(CyberbullyingError, ValueError):
    """Parâmetro fora do domínio permitido"""


class StratificationError(CyberbullyingError, ValueError):
    """Rótulo sem documentos para estratificar"""


class ShapeError(CyberbullyingError, ValueError):
    """Dimensões incompatíveis"""


class DataError(CyberbullyingError, ValueError):
    """Valores de entrada inválidos (negativos, não finitos, ...)"""


class SpecError(CyberbullyingError, ValueError):
    """Especificação de classificador inválida"""


class CompatibilityError(CyberbullyingError, ValueError):
    """Matriz ou membro gerado por outro espaço de atributos"""


class IntegrityError(CyberbullyingError, ValueError):
    """Checksum ou fingerprint não confere"""


class MigrationError(CyberbullyingError, ValueError):
    """Versão de formato de modelo não suportada"""

    def __init__(self, found: object, supported: int):
        self.found = found
        self.supported = supported
        super().__init__(
            f"Formato de modelo versão {found} não suportado (versão suportada: {supported})")
