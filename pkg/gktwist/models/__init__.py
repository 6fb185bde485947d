from gktwist.models.models import CheckStatus, NijenhuisBlock, Sheet, SuiteName, TwistorStructure

__all__ = ["CheckStatus", "NijenhuisBlock", "Sheet", "SuiteName", "TwistorStructure"]
